#pragma once

#include <stdexcept>
#include <string>

namespace lcd {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file (bad header, truncated body, non-numeric field).
class ParseError : public Error {
public:
    using Error::Error;
};

// Input file is well-formed but uses a feature we do not handle.
class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

// Filesystem-level failure (cannot open, cannot write, rename failed).
class IoError : public Error {
public:
    using Error::Error;
};

// Data violates a documented invariant (non-unit descriptor norm,
// non-increasing timestamps, duplicate keyframe ids, ...).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

// Point configuration is rank-deficient (collinear/coincident) and the
// requested fit has no unique solution.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

// Too few points inside a spherical patch to describe the region.
class EmptyPatch : public Error {
public:
    using Error::Error;
};

// k-NN covariance of a point neighbourhood is rank deficient.
class DegenerateNeighborhood : public Error {
public:
    using Error::Error;
};

// Descriptor sets with different dimensionality were combined.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Fewer correspondences than the minimal sample size.
class InsufficientCorrespondences : public Error {
public:
    using Error::Error;
};

// RANSAC found no hypothesis with enough inliers; the pair cannot be
// registered.
class NoConsensus : public Error {
public:
    using Error::Error;
};

// RON was requested on an empty correspondence set.
class EmptyCorrespondences : public Error {
public:
    using Error::Error;
};

// A scored pair has no ground-truth label.
class MissingLabel : public Error {
public:
    using Error::Error;
};

// Too few timestamp associations between trajectories.
class InsufficientAssociations : public Error {
public:
    using Error::Error;
};

} // namespace lcd
