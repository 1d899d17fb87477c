#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

namespace hte {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// All library errors carry a short machine-parseable tag (e.g. "SCHEMA_TREATMENT")
// that the CLI prints on stderr before exiting.
class Error : public std::runtime_error {
public:
    Error(std::string tag, const std::string& what)
        : std::runtime_error(what), tag_(std::move(tag)) {}
    const std::string& tag() const { return tag_; }

private:
    std::string tag_;
};

// Malformed input data or column-role configuration.  CLI exit code 2.
struct SchemaError : Error {
    using Error::Error;
};

// Unreadable or empty input files.  CLI exit code 2.
struct IngestionError : Error {
    using Error::Error;
};

// A caller violated an operation precondition.  CLI exit code 2.
struct ContractError : Error {
    using Error::Error;
};

// Numerical failure (singular system, non-convergence, factorization failure).
// CLI exit code 3.
struct NumericalError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& tag, const std::string& msg) {
    if (!cond) throw ContractError(tag, msg);
}

}  // namespace hte
