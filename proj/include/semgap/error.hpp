#pragma once

#include <stdexcept>
#include <string>

namespace semgap {

// Base for every error raised by the library. The CLI maps the subclasses
// onto its exit codes (see app/pipeline.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text (corpus files, prompt banks, manifests).
class ParseError : public Error {
public:
    using Error::Error;
};

// Two inputs that must line up don't (e.g. WiC data vs gold line counts).
class AlignmentError : public Error {
public:
    using Error::Error;
};

// Archive does not follow the HSX1 layout.
class FormatError : public Error {
public:
    using Error::Error;
};

// Archive header and payload disagree (truncation, bad offsets).
class CorruptionError : public Error {
public:
    using Error::Error;
};

// Numerically or structurally invalid data (NaN/Inf, shape mismatch, bad label).
class DataError : public Error {
public:
    using Error::Error;
};

// A required input file or record is absent.
class MissingInputError : public Error {
public:
    MissingInputError(const std::string& what, std::string path)
        : Error(what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Caller violated an operation precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace semgap
