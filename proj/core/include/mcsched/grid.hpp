#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mcsched {

// Dense row-major matrix, just enough for request/duration/gain tables.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Grid: negative dimension");
  }
  static Grid from_rows(const std::vector<std::vector<T>>& rows) {
    if (rows.empty()) return Grid(0, 0);
    Grid g(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < g.rows(); ++r) {
      if (static_cast<int>(rows[r].size()) != g.cols())
        throw std::invalid_argument("Grid: ragged rows");
      for (int c = 0; c < g.cols(); ++c) g(r, c) = rows[r][c];
    }
    return g;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  T& at(int r, int c) {
    check(r, c);
    return (*this)(r, c);
  }
  const T& at(int r, int c) const {
    check(r, c);
    return (*this)(r, c);
  }

  std::vector<T> row(int r) const {
    std::vector<T> out(cols_);
    for (int c = 0; c < cols_; ++c) out[c] = (*this)(r, c);
    return out;
  }
  void set_row(int r, const std::vector<T>& v) {
    if (static_cast<int>(v.size()) != cols_) throw std::invalid_argument("Grid: row size");
    for (int c = 0; c < cols_; ++c) (*this)(r, c) = v[c];
  }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  bool operator==(const Grid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  void check(int r, int c) const {
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
      throw std::out_of_range("Grid index out of range");
  }
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace mcsched
