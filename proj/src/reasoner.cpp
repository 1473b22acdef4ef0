#include "acg/reasoner.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace acg {

std::string to_string(QueryKind kind) {
    switch (kind) {
        case QueryKind::PartIdentify: return "part_identify";
        case QueryKind::ConceptSelect: return "concept_select";
        case QueryKind::GraspSelect: return "grasp_select";
        case QueryKind::ForceSelect: return "force_select";
    }
    return "?";
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool is_select(QueryKind kind) { return kind != QueryKind::PartIdentify; }

const char* kPartIdentifyTemplate =
    "You are guiding a robot manipulator.\n"
    "Task: {task}\n"
    "Workspace image: {image}\n"
    "Find the part to interact with in the image in order to complete the task, and "
    "determine the category of the part.\n"
    "Answer with the part category only (for example: handle, lid, knob).";

const char* kConceptSelectTemplate =
    "You are matching an observed object part against a library of parametric part "
    "templates.\n"
    "Task: {task}\n"
    "Candidate concepts:\n{options}\n"
    "Which concept best matches the spatial structure of the target part?\n"
    "Answer with the concept id only.";

const char* kGraspSelectTemplate =
    "A robot with a parallel gripper must complete this task: {task}\n"
    "Available grasp poses for the grounded part:\n{options}\n"
    "Which grasp pose works best to accomplish the task?\n"
    "Answer with the grasp id only.";

const char* kForceSelectTemplate =
    "A robot has grasped the target part. Task: {task}\n"
    "Available force directions:\n{options}\n"
    "Which force direction works best to accomplish the task?\n"
    "Answer with the force id only.";

}  // namespace

PromptTemplate default_template(QueryKind kind) {
    switch (kind) {
        case QueryKind::PartIdentify: return {kind, kPartIdentifyTemplate};
        case QueryKind::ConceptSelect: return {kind, kConceptSelectTemplate};
        case QueryKind::GraspSelect: return {kind, kGraspSelectTemplate};
        case QueryKind::ForceSelect: return {kind, kForceSelectTemplate};
    }
    throw Error("bad query kind");
}

PromptTemplate load_template_file(QueryKind kind, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open prompt template: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return {kind, ss.str()};
}

namespace {

bool replace_all(std::string& text, const std::string& placeholder, const std::string& value) {
    bool any = false;
    std::size_t at = 0;
    while ((at = text.find(placeholder, at)) != std::string::npos) {
        text.replace(at, placeholder.size(), value);
        at += value.size();
        any = true;
    }
    return any;
}

}  // namespace

std::string render_prompt(const PromptTemplate& tmpl, const ReasonerQuery& query) {
    if (tmpl.kind != query.kind) throw Error("render_prompt: template kind mismatch");
    if (is_select(query.kind) && query.options.empty())
        throw Error("render_prompt: select query without options");

    std::string text = tmpl.text;
    if (!replace_all(text, "{task}", query.task)) throw MissingPlaceholder("{task}");

    std::string options;
    for (std::size_t i = 0; i < query.options.size(); ++i) {
        options += std::to_string(i + 1) + ". " + query.options[i].first + ": " +
                   query.options[i].second + "\n";
    }
    if (!options.empty() && options.back() == '\n') options.pop_back();
    const bool had_options = replace_all(text, "{options}", options);
    if (is_select(query.kind) && !had_options) throw MissingPlaceholder("{options}");

    replace_all(text, "{image}", query.image_ref.value_or("(no image provided)"));
    if (text.empty()) throw Error("render_prompt: empty prompt");
    return text;
}

// -------------------------------------------------------- transcript ---

TranscriptLog::TranscriptLog(const std::string& path) : path_(path) {}

void TranscriptLog::record(const ReasonerQuery& query, const std::string& prompt,
                           const std::string& raw, const std::string& chosen,
                           const std::string& note) {
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    nlohmann::ordered_json j;
    j["ts_ms"] = now;
    j["kind"] = to_string(query.kind);
    j["task"] = query.task;
    j["prompt"] = prompt;
    j["raw"] = raw;
    j["chosen"] = chosen;
    if (!note.empty()) j["note"] = note;

    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append transcript: " + path_);
    out << j.dump() << "\n";
}

// -------------------------------------------------------------- mock ---

MockBackend::MockBackend(std::vector<MockRule> rules, std::string fallback)
    : rules_(std::move(rules)), fallback_(std::move(fallback)) {
    for (const auto& r : rules_)
        if (r.keywords.empty() || r.choice.empty())
            throw Error("mock rule needs keywords and a choice");
}

std::string MockBackend::complete(const std::string&, const ReasonerQuery& query) {
    const std::string task = lower(query.task);
    const MockRule* best = nullptr;
    for (const auto& rule : rules_) {
        if (rule.kind && *rule.kind != query.kind) continue;
        bool all = true;
        for (const auto& kw : rule.keywords)
            if (task.find(lower(kw)) == std::string::npos) {
                all = false;
                break;
            }
        if (!all) continue;
        if (!best || rule.keywords.size() > best->keywords.size()) best = &rule;
    }
    return best ? best->choice : fallback_;
}

MockBackend MockBackend::with_default_rules() {
    using K = QueryKind;
    // keyword tables mirroring the benchmark task phrasings
    std::vector<MockRule> rules = {
        // part identification -> group tag
        {{"drawer"}, "handle", K::PartIdentify},
        {{"cabinet"}, "handle", K::PartIdentify},
        {{"faucet"}, "handle", K::PartIdentify},
        {{"lid"}, "lid", K::PartIdentify},
        {{"laptop"}, "door_board", K::PartIdentify},
        {{"button"}, "button", K::PartIdentify},
        {{"bottle"}, "cap", K::PartIdentify},
        {{"dial"}, "knob", K::PartIdentify},
        // concept selection
        {{"cabinet", "door"}, "L_Handle", K::ConceptSelect},
        {{"faucet", "handle"}, "L_Handle", K::ConceptSelect},
        {{"drawer"}, "U_Handle", K::ConceptSelect},
        {{"lid", "pot"}, "Knob_Lid", K::ConceptSelect},
        {{"lid", "kettle"}, "Handle_Lid", K::ConceptSelect},
        {{"laptop"}, "Laptop_Board", K::ConceptSelect},
        {{"door"}, "Door_Board", K::ConceptSelect},
        // grasp family selection
        {{"drawer"}, "grasp_above", K::GraspSelect},
        {{"door"}, "grasp_above", K::GraspSelect},
        {{"lid", "lift"}, "grasp_knob", K::GraspSelect},
        {{"kettle", "lift"}, "grasp_bar", K::GraspSelect},
        {{"turn"}, "grasp_above", K::GraspSelect},
        {{"laptop"}, "grasp_edge", K::GraspSelect},
        // force rule selection (counterclockwise precedes its substring)
        {{"counterclockwise"}, "push_counterclockwise", K::ForceSelect},
        {{"open", "drawer"}, "pull_outward", K::ForceSelect},
        {{"open", "door"}, "pull_outward", K::ForceSelect},
        {{"close", "drawer"}, "push_inward", K::ForceSelect},
        {{"lift"}, "lift_up", K::ForceSelect},
        {{"clockwise"}, "push_clockwise", K::ForceSelect},
        {{"open", "laptop"}, "swing_outward", K::ForceSelect},
        {{"close", "laptop"}, "swing_inward", K::ForceSelect},
        {{"press"}, "press_in", K::ForceSelect},
        {{"loosen"}, "twist_loosen", K::ForceSelect},
        {{"tighten"}, "twist_tighten", K::ForceSelect},
    };
    return MockBackend(std::move(rules), "none");
}

// -------------------------------------------------------------- http ---

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw Error("http backend: empty endpoint");
}

namespace {

struct ParsedUrl {
    std::string host_port;
    std::string path;
};

ParsedUrl parse_http_url(const std::string& url) {
    const std::string prefix = "http://";
    if (url.rfind(prefix, 0) != 0)
        throw BackendUnreachable("only plain http endpoints are supported: " + url);
    const std::string rest = url.substr(prefix.size());
    const auto slash = rest.find('/');
    ParsedUrl out;
    out.host_port = "http://" + (slash == std::string::npos ? rest : rest.substr(0, slash));
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    return out;
}

}  // namespace

std::string HttpBackend::complete(const std::string& prompt, const ReasonerQuery&) {
    const ParsedUrl url = parse_http_url(config_.endpoint);

    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});

    httplib::Client client(url.host_port);
    const auto timeout = std::chrono::milliseconds(
        static_cast<long long>(std::max(0.001, config_.timeout_s) * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!config_.token_env.empty()) {
        if (const char* token = std::getenv(config_.token_env.c_str()); token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, config_.max_retries); ++attempt) {
        auto res = client.Post(url.path, headers, body.dump(), "application/json");
        if (!res) {
            const auto err = httplib::to_string(res.error());
            if (res.error() == httplib::Error::ConnectionTimeout ||
                res.error() == httplib::Error::Read || res.error() == httplib::Error::Write)
                last_error = "timeout/" + err;
            else
                last_error = err;
            continue;
        }
        if (res->status >= 500) {
            last_error = "server status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw BackendUnreachable("status " + std::to_string(res->status) + ": " + res->body);
        try {
            const auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendUnreachable(std::string("malformed completion response: ") + e.what());
        }
    }
    if (last_error.rfind("timeout/", 0) == 0) throw TimeoutError(last_error.substr(8));
    throw BackendUnreachable(last_error.empty() ? "no response" : last_error);
}

HttpBackendConfig load_reasoner_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reasoner config: " + path);
    HttpBackendConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key == "endpoint") cfg.endpoint = value;
        else if (key == "model") cfg.model = value;
        else if (key == "token_env") cfg.token_env = value;
        else if (key == "timeout_s") cfg.timeout_s = std::stod(value);
        else if (key == "max_retries") cfg.max_retries = std::stoi(value);
        else throw IoError(path + ":" + std::to_string(lineno) + ": unknown key " + key);
    }
    if (cfg.endpoint.empty()) throw IoError(path + ": missing endpoint");
    return cfg;
}

// ---------------------------------------------------------------- ask ---

namespace {

/// Longest option id that occurs in the raw output as a standalone token.
std::string match_option(const std::string& raw,
                         const std::vector<std::pair<std::string, std::string>>& options) {
    const std::string hay = lower(raw);
    const std::string trimmed = lower(trim(raw));
    std::string best;
    for (const auto& [id, _] : options) {
        const std::string needle = lower(id);
        if (trimmed == needle) return id;  // exact answer
        std::size_t at = hay.find(needle);
        while (at != std::string::npos) {
            const bool left_ok =
                at == 0 || !(std::isalnum(static_cast<unsigned char>(hay[at - 1])) ||
                             hay[at - 1] == '_');
            const std::size_t end = at + needle.size();
            const bool right_ok =
                end >= hay.size() || !(std::isalnum(static_cast<unsigned char>(hay[end])) ||
                                       hay[end] == '_');
            if (left_ok && right_ok) {
                if (id.size() > best.size()) best = id;
                break;
            }
            at = hay.find(needle, at + 1);
        }
    }
    return best;
}

}  // namespace

ReasonerAnswer ask(ReasonerBackend& backend, const ReasonerQuery& query,
                   const PromptTemplate* custom_template, TranscriptLog* transcript) {
    if (is_select(query.kind)) {
        if (query.options.empty()) throw Error("ask: select query without options");
        if (query.options.size() == 1) {
            ReasonerAnswer answer{query.options.front().first, "forced choice (single option)",
                                  ""};
            if (transcript)
                transcript->record(query, "", "", answer.chosen, "single-option fast path");
            return answer;
        }
    }

    const PromptTemplate tmpl =
        custom_template ? *custom_template : default_template(query.kind);
    const std::string prompt = render_prompt(tmpl, query);

    std::string last_raw;
    for (int attempt = 0; attempt < 3; ++attempt) {
        const std::string raw = backend.complete(prompt, query);
        last_raw = raw;
        if (!is_select(query.kind)) {
            ReasonerAnswer answer{trim(raw), "part descriptor from " + backend.name(), raw};
            if (transcript) transcript->record(query, prompt, raw, answer.chosen, "");
            return answer;
        }
        const std::string chosen = match_option(raw, query.options);
        if (!chosen.empty()) {
            ReasonerAnswer answer{chosen, "matched option from " + backend.name(), raw};
            if (transcript) transcript->record(query, prompt, raw, chosen, "");
            return answer;
        }
        if (transcript)
            transcript->record(query, prompt, raw, "",
                               "attempt " + std::to_string(attempt + 1) + ": no option matched");
    }
    throw InvalidChoice("backend `" + backend.name() + "` never named an offered option (last: `" +
                        last_raw + "`)");
}

}  // namespace acg
