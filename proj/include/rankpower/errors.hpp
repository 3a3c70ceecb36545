#pragma once

#include <stdexcept>
#include <string>

// Error taxonomy shared by all modules. Each type carries a stable name()
// so the CLI can report machine-readable error identifiers.

namespace rankpower {

class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define RANKPOWER_DEFINE_ERROR(Type)                        \
    class Type : public Error {                             \
    public:                                                 \
        explicit Type(const std::string& what = #Type)      \
            : Error(#Type, what) {}                         \
    }

RANKPOWER_DEFINE_ERROR(DuplicateValue);
RANKPOWER_DEFINE_ERROR(LengthMismatch);
RANKPOWER_DEFINE_ERROR(CapExceeded);
RANKPOWER_DEFINE_ERROR(QuadratureFailure);
RANKPOWER_DEFINE_ERROR(NotBracketed);
RANKPOWER_DEFINE_ERROR(NoSolution);
RANKPOWER_DEFINE_ERROR(ZeroDerivative);
RANKPOWER_DEFINE_ERROR(DegenerateFit);
RANKPOWER_DEFINE_ERROR(NonFinite);
RANKPOWER_DEFINE_ERROR(InvalidArgument);

#undef RANKPOWER_DEFINE_ERROR

} // namespace rankpower
