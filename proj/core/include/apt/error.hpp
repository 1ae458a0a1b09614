#pragma once

#include <stdexcept>
#include <string>

namespace apt {

// Base for every error raised by the library. Callers that only need to
// report failures catch this; callers that react differently per cause catch
// the concrete subclasses.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Raised before dispatch when a request or packed prompt does not fit the
// configured token budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    using Error::Error;
};

class MalformedOutput : public Error {
public:
    using Error::Error;
};

class GenerationFailure : public Error {
public:
    using Error::Error;
};

}  // namespace apt
