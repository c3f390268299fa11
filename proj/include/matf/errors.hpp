#pragma once

#include <stdexcept>
#include <string>

namespace matf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct PlacementError : Error {
    using Error::Error;
};
struct InputError : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace matf
