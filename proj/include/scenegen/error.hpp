#pragma once

#include <stdexcept>
#include <string>

namespace scenegen {

// Base class for all engine errors. CLI maps these to exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateRotation : Error {
  using Error::Error;
};
struct InvalidScale : Error {
  using Error::Error;
};
struct InsufficientData : Error {
  using Error::Error;
};
struct DegenerateFrame : Error {
  using Error::Error;
};
struct UnknownRelation : Error {
  using Error::Error;
};
struct UnknownSceneType : Error {
  using Error::Error;
};
struct NoSupportBelow : Error {
  using Error::Error;
};
struct EmptyScene : Error {
  using Error::Error;
};
struct EmptyInput : Error {
  using Error::Error;
};

// Malformed input document; carries a human-readable location.
struct ParseError : Error {
  using Error::Error;
};

// Structurally invalid hierarchy/config; names the offending element.
struct ValidationError : Error {
  using Error::Error;
};

}  // namespace scenegen
