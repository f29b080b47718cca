#pragma once

#include <stdexcept>

namespace covtest {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotSquareError : public Error { public: using Error::Error; };
class NotHermitianError : public Error { public: using Error::Error; };
class NotPositiveDefiniteError : public Error { public: using Error::Error; };
class NoConvergenceError : public Error { public: using Error::Error; };
class RankDeficientError : public Error { public: using Error::Error; };
class RankDeficientBlockError : public Error { public: using Error::Error; };
class NonPositiveOmegaError : public Error { public: using Error::Error; };
class GeometryMismatchError : public Error { public: using Error::Error; };
class WrongGeometryError : public Error { public: using Error::Error; };
class MalformedCoherenceError : public Error { public: using Error::Error; };
class MalformedNormalizedCovarianceError : public Error { public: using Error::Error; };
class InsufficientSamplesError : public Error { public: using Error::Error; };
class InsufficientTrialsError : public Error { public: using Error::Error; };
class DegenerateDrawError : public Error { public: using Error::Error; };
class InvalidDofError : public Error { public: using Error::Error; };
class InvalidProbabilityError : public Error { public: using Error::Error; };
class UnsupportedDetectorError : public Error { public: using Error::Error; };

}  // namespace covtest
