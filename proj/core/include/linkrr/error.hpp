#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace linkrr {

// All library failures surface as Error carrying the originating module tag,
// so callers (and the CLI exit path) can report "[module] message".
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& message)
        : std::runtime_error("[" + module + "] " + message), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

}  // namespace linkrr
