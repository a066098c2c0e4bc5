#pragma once
// Records the discrete and stop-gradient decisions made during a forward pass
// (argmax indices, fusion alphas) so a later pass can replay them exactly.
// Finite-difference checks need this: perturbing a weight must not flip an
// argmax or move alpha, since neither is differentiated.

#include <cstddef>
#include <vector>

namespace mb {

class ControlTrace {
 public:
  enum class Mode { record, replay };

  explicit ControlTrace(Mode mode = Mode::record) : mode_(mode) {}

  Mode mode() const { return mode_; }
  // Switch to replay from the start of the recorded sequences.
  void rewind_for_replay();

  std::size_t index(std::size_t computed);
  double alpha(double computed);

  const std::vector<std::size_t>& indices() const { return indices_; }
  const std::vector<double>& alphas() const { return alphas_; }

 private:
  Mode mode_;
  std::vector<std::size_t> indices_;
  std::vector<double> alphas_;
  std::size_t index_cursor_ = 0;
  std::size_t alpha_cursor_ = 0;
};

}  // namespace mb
