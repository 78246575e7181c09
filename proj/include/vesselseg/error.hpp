#pragma once

#include <stdexcept>
#include <string>

namespace vesselseg {

/// Base of every error thrown by the library. The CLI maps these to exit code 1
/// except ParameterError raised while validating user arguments.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ReadError : public Error {
public:
    using Error::Error;
};

/// Not a single-file NIfTI-1 image (bad magic).
class FormatError : public Error {
public:
    using Error::Error;
};

class UnsupportedDatatypeError : public Error {
public:
    using Error::Error;
};

/// Header size field wrong, truncated payload, or non-finite voxel data.
class CorruptFileError : public Error {
public:
    using Error::Error;
};

class InvalidGeometryError : public Error {
public:
    using Error::Error;
};

class WriteError : public Error {
public:
    using Error::Error;
};

/// A statistic was requested over an empty voxel population.
class EmptySelectionError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

/// Two volumes that must share dims/spacing do not, or a volume is too small.
class GeometryError : public Error {
public:
    using Error::Error;
};

}  // namespace vesselseg
