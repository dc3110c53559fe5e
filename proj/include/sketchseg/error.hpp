#pragma once

#include <stdexcept>
#include <string>

namespace sketchseg {

// Machine-checkable failure kinds. Tests match on the code, messages are
// for humans.
enum class Errc {
  MalformedHeader,
  WrongBitDepth,
  TruncatedPayload,
  LabelOutOfRange,
  IoFailure,
  SizeMismatch,
  BadConfig,
  BadManifest,
  BadTaxonomy,
  UnknownBranch,
  NonFiniteInput,
  EmptyDataset,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace sketchseg
