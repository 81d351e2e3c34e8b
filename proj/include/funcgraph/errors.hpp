#pragma once

#include <stdexcept>
#include <string>

namespace funcgraph {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// graph-model
struct CorpusEmpty : Error { using Error::Error; };
struct ReservedTermConflict : Error { using Error::Error; };
struct UnknownTerm : Error {
    UnknownTerm(const std::string& field, const std::string& term)
        : Error("unknown term '" + term + "' for field '" + field + "'"),
          field(field), term(term) {}
    std::string field;
    std::string term;
};
struct DanglingEdge : Error { using Error::Error; };

// ingest
struct ParseError : Error {
    ParseError(std::size_t line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line(line) {}
    std::size_t line;
};
struct QualifierError : Error {
    QualifierError(std::size_t line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line(line) {}
    std::size_t line;
};
struct SystemRejected : Error { using Error::Error; };
struct SplitError : Error { using Error::Error; };

// numcore
struct ShapeError : Error { using Error::Error; };
struct LabelError : Error { using Error::Error; };
struct WeightError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };

// experiment / cli
struct DivergedError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct VocabHashError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace funcgraph
