#pragma once

#include <stdexcept>
#include <string>

namespace armed {

enum class Errc {
    timeout,
    transport,
    no_backend_for_role,
    no_scripted_response,
    parse_error,
    duplicate_rule_id,
    schema_error,
    empty_input,
    cannot_balance,
    undefined_metric,
    data_inconsistency,
    standardization_required,
    config_error,
    io_error,
};

const char* errc_name(Errc code);

/// Transport-class failures are worth retrying; everything else is permanent.
bool errc_retryable(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace armed
