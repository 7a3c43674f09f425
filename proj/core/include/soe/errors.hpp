#pragma once

#include <stdexcept>
#include <string>

namespace soe {

// Failure taxonomy shared across the engine. CLI exit-code mapping:
// usage/config family -> 1, I/O -> 2, remote clients -> 3.
enum class ErrorKind {
    usage,
    config,
    dimension,
    geometry,
    schedule,
    not_psd,
    degenerate,
    attribution,
    io,
    service,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
            case ErrorKind::io:
                return 2;
            case ErrorKind::service:
            case ErrorKind::attribution:
                return 3;
            default:
                return 1;
        }
    }

  private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error(ErrorKind::usage, m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};
struct DimensionError : Error {
    explicit DimensionError(const std::string& m) : Error(ErrorKind::dimension, m) {}
};
struct GeometryError : Error {
    explicit GeometryError(const std::string& m) : Error(ErrorKind::geometry, m) {}
};
struct ScheduleError : Error {
    explicit ScheduleError(const std::string& m) : Error(ErrorKind::schedule, m) {}
};
struct NotPsdError : Error {
    explicit NotPsdError(const std::string& m) : Error(ErrorKind::not_psd, m) {}
};
struct DegenerateInputError : Error {
    explicit DegenerateInputError(const std::string& m) : Error(ErrorKind::degenerate, m) {}
};
struct AttributionError : Error {
    explicit AttributionError(const std::string& m) : Error(ErrorKind::attribution, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};
struct ServiceError : Error {
    explicit ServiceError(const std::string& m) : Error(ErrorKind::service, m) {}
};

}  // namespace soe
