#include "motionbank/control_trace.hpp"

#include "motionbank/errors.hpp"

namespace mb {

void ControlTrace::rewind_for_replay() {
  mode_ = Mode::replay;
  index_cursor_ = 0;
  alpha_cursor_ = 0;
}

std::size_t ControlTrace::index(std::size_t computed) {
  if (mode_ == Mode::record) {
    indices_.push_back(computed);
    return computed;
  }
  if (index_cursor_ >= indices_.size()) throw ValidationError("control trace: replay ran past recorded indices");
  return indices_[index_cursor_++];
}

double ControlTrace::alpha(double computed) {
  if (mode_ == Mode::record) {
    alphas_.push_back(computed);
    return computed;
  }
  if (alpha_cursor_ >= alphas_.size()) throw ValidationError("control trace: replay ran past recorded alphas");
  return alphas_[alpha_cursor_++];
}

}  // namespace mb
