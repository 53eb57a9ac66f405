#pragma once

#include <stdexcept>
#include <string>

namespace touchforge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text: manifest lines, config strings, model files.
class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// A stage was asked to run without the configuration it needs.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace touchforge
