#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cxrgan {

// Error hierarchy. The CLI maps each kind onto a process exit code.

/// Invalid configuration, missing class directory, bad parameter. Exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable or unwritable file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or image shape does not match what the consumer expects.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checkpoint or artifact fingerprint mismatch on resume/load. Exit code 3.
class FingerprintError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A prerequisite artifact (generator, model, prepared data) is absent. Exit code 4.
class MissingArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pretrained weights were found but their checksum does not match.
class ChecksumError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient during optimization.
class TrainingInstabilityError : public std::runtime_error {
public:
    TrainingInstabilityError(const std::string& what, std::int64_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

}  // namespace cxrgan
