#pragma once

#include <stdexcept>
#include <string>

namespace curator {

/// Violated precondition or misuse of a module API.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure inside a pipeline stage (I/O, backend, protocol).
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Backend failure attributable to a specific item of a batched request.
class BackendItemError : public StageError {
public:
    BackendItemError(std::string stage, size_t item_index, const std::string& what)
        : StageError(std::move(stage), "item " + std::to_string(item_index) + ": " + what),
          item_index_(item_index) {}

    size_t item_index() const { return item_index_; }

private:
    size_t item_index_;
};

}  // namespace curator
