#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "acg/errors.hpp"

namespace acg {

enum class QueryKind { PartIdentify, ConceptSelect, GraspSelect, ForceSelect };

std::string to_string(QueryKind kind);

struct ReasonerQuery {
    QueryKind kind;
    std::string task;
    std::vector<std::pair<std::string, std::string>> options;  // (id, synopsis); Select kinds
    std::optional<std::string> image_ref;
};

struct ReasonerAnswer {
    std::string chosen;     // option id, or the part descriptor for PartIdentify
    std::string rationale;
    std::string raw;        // verbatim backend output
};

struct PromptTemplate {
    QueryKind kind;
    std::string text;  // placeholders: {task}, {options}, {image}
};

PromptTemplate default_template(QueryKind kind);
PromptTemplate load_template_file(QueryKind kind, const std::string& path);

/// Deterministic placeholder substitution; options render as a numbered
/// `id: synopsis` list. Throws MissingPlaceholder when a required
/// placeholder is absent from the template.
std::string render_prompt(const PromptTemplate& tmpl, const ReasonerQuery& query);

/// Append-only JSON-lines log of every backend exchange.
class TranscriptLog {
public:
    explicit TranscriptLog(const std::string& path);
    void record(const ReasonerQuery& query, const std::string& prompt, const std::string& raw,
                const std::string& chosen, const std::string& note);

private:
    std::string path_;
    std::mutex mutex_;
};

class ReasonerBackend {
public:
    virtual ~ReasonerBackend() = default;
    virtual std::string name() const = 0;
    virtual std::string complete(const std::string& prompt, const ReasonerQuery& query) = 0;
};

struct MockRule {
    std::vector<std::string> keywords;      // all must occur in the task text
    std::string choice;
    std::optional<QueryKind> kind;          // restrict to one query kind; unset = any
};

/// Rule-table backend: a pure function of (rules, query). Among rules whose
/// keywords all occur in the task, the largest keyword set wins; ties go to
/// the first declared rule; no match yields the fallback choice.
class MockBackend : public ReasonerBackend {
public:
    MockBackend(std::vector<MockRule> rules, std::string fallback);

    /// Rule table covering the benchmark task phrasings.
    static MockBackend with_default_rules();

    std::string name() const override { return "mock"; }
    std::string complete(const std::string& prompt, const ReasonerQuery& query) override;

private:
    std::vector<MockRule> rules_;
    std::string fallback_;
};

struct HttpBackendConfig {
    std::string endpoint;   // http://host[:port]/path
    std::string model;
    std::string token_env;  // environment variable holding the bearer token
    double timeout_s = 30.0;
    int max_retries = 3;
};

/// Minimal chat-completion client (plain HTTP). Request/response shapes
/// follow the common `messages`/`choices` JSON layout.
class HttpBackend : public ReasonerBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    std::string name() const override { return "http"; }
    std::string complete(const std::string& prompt, const ReasonerQuery& query) override;

private:
    HttpBackendConfig config_;
};

/// `key = value` configuration for the live backend.
HttpBackendConfig load_reasoner_config(const std::string& path);

/// Runs one question-answer exchange. Select-kind answers are validated
/// against the offered options and retried up to 3 times; a single-option
/// query short-circuits without touching the backend.
ReasonerAnswer ask(ReasonerBackend& backend, const ReasonerQuery& query,
                   const PromptTemplate* custom_template = nullptr,
                   TranscriptLog* transcript = nullptr);

}  // namespace acg
