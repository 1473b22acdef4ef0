#pragma once

#include <stdexcept>
#include <string>

namespace acg {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- concept registry ---
struct DuplicateId : Error {
    explicit DuplicateId(const std::string& id)
        : Error("concept id already registered: " + id) {}
};
struct InvalidConcept : Error {
    explicit InvalidConcept(const std::string& why) : Error("invalid concept: " + why) {}
};
struct UnknownGroup : Error {
    explicit UnknownGroup(const std::string& g) : Error("unknown concept group: " + g) {}
};
struct UnknownConcept : Error {
    explicit UnknownConcept(const std::string& id) : Error("unknown concept: " + id) {}
};

// --- expression evaluation ---
struct MissingBinding : Error {
    explicit MissingBinding(const std::string& sym)
        : Error("no binding for symbol: " + sym) {}
};
struct DomainError : Error {
    explicit DomainError(const std::string& why) : Error("domain error: " + why) {}
};

// --- structure instantiation / grasping ---
struct OutOfRangeParam : Error {
    explicit OutOfRangeParam(const std::string& why) : Error("parameter out of range: " + why) {}
};
struct OutOfRangeTheta : Error {
    explicit OutOfRangeTheta(const std::string& why)
        : Error("grasp parameter out of range: " + why) {}
};
struct AllCandidatesRejected : Error {
    explicit AllCandidatesRejected(double best)
        : Error("all grasp candidates scored below the acceptance floor (best " +
                std::to_string(best) + ")") {}
};

// --- numerical alignment ---
struct DegenerateConfiguration : Error {
    explicit DegenerateConfiguration(const std::string& why)
        : Error("degenerate configuration: " + why) {}
};
struct NoConsensus : Error {
    explicit NoConsensus(const std::string& why) : Error("ransac found no consensus: " + why) {}
};
struct FitDiverged : Error {
    double residual;
    explicit FitDiverged(double r)
        : Error("structural fit diverged (residual " + std::to_string(r) + ")"), residual(r) {}
};

// --- reasoner gateway ---
struct MissingPlaceholder : Error {
    explicit MissingPlaceholder(const std::string& ph)
        : Error("prompt template missing placeholder: " + ph) {}
};
struct BackendUnreachable : Error {
    explicit BackendUnreachable(const std::string& why)
        : Error("reasoner backend unreachable: " + why) {}
};
struct InvalidChoice : Error {
    explicit InvalidChoice(const std::string& why) : Error("invalid reasoner choice: " + why) {}
};
struct TimeoutError : Error {
    explicit TimeoutError(const std::string& why) : Error("reasoner timeout: " + why) {}
};

// --- simulation ---
struct UnknownArchetype : Error {
    explicit UnknownArchetype(const std::string& a) : Error("unknown archetype: " + a) {}
};
struct InvalidGrasp : Error {
    explicit InvalidGrasp(const std::string& why) : Error("invalid grasp: " + why) {}
};

// --- IO ---
struct IoError : Error {
    explicit IoError(const std::string& why) : Error("io error: " + why) {}
};

}  // namespace acg
