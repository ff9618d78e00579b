#include "styleval/errors.hpp"

namespace styleval {

const char* Error::code_name() const noexcept {
  switch (code_) {
    case Errc::bad_config: return "BadConfig";
    case Errc::unsupported: return "Unsupported";
    case Errc::malformed_line: return "MalformedLine";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::inconsistent_group: return "InconsistentGroup";
    case Errc::io_error: return "IoError";
    case Errc::decode_error: return "DecodeError";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::empty_caption: return "EmptyCaption";
    case Errc::insufficient_labels: return "InsufficientLabels";
    case Errc::no_positive_pair: return "NoPositivePair";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::cache_corrupt: return "CacheCorrupt";
    case Errc::checkpoint_corrupt: return "CheckpointCorrupt";
    case Errc::label_missing_in_keys: return "LabelMissingInKeys";
    case Errc::empty_group: return "EmptyGroup";
    case Errc::missing_output: return "MissingOutput";
    case Errc::backend_unavailable: return "BackendUnavailable";
  }
  return "Unknown";
}

}  // namespace styleval
