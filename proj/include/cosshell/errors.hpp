#pragma once

#include <stdexcept>
#include <string>

namespace cosshell {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// so3
struct AngleAtPi : Error {
  AngleAtPi() : Error("rotation angle within 1e-8 of pi; axis extraction is ill-conditioned") {}
};
struct NonPositiveDeterminant : Error {
  NonPositiveDeterminant() : Error("polar decomposition requires det F > 0") {}
};

// mesh
struct ParseError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct NonManifoldEdge : Error {
  using Error::Error;
};
struct DegenerateImmersion : Error {
  explicit DegenerateImmersion(long triangle)
      : Error("degenerate immersion in triangle " + std::to_string(triangle)),
        triangle(triangle) {}
  long triangle;
};
struct InvalidResolution : Error {
  using Error::Error;
};

// gfe
struct CoefficientsTooSpread : Error {
  CoefficientsTooSpread() : Error("rotation coefficients too spread for interpolation") {}
  explicit CoefficientsTooSpread(const std::string& what) : Error(what) {}
};
struct NoConvergence : Error {
  using Error::Error;
};

// assembly / solver
struct UnsupportedOrder : Error {
  using Error::Error;
};
struct UnknownNode : Error {
  using Error::Error;
};
struct InvalidMaterial : Error {
  using Error::Error;
};
struct StalledAtNonstationaryPoint : Error {
  using Error::Error;
};

// cli
struct EmptySelection : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace cosshell
