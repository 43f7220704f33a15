#include "pdmosc/io/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace pdmosc::io {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config error at '" + path + "': " + what);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
    }
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double require_number(const json& obj, const std::string& path, const char* key) {
    const json* v = find(obj, key);
    if (!v) fail(path + "." + key, "missing required key");
    if (!v->is_number()) fail(path + "." + key, "expected a number");
    return v->get<double>();
}

double optional_number(const json& obj, const std::string& path, const char* key,
                       double fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) fail(path + "." + key, "expected a number");
    return v->get<double>();
}

long optional_integer(const json& obj, const std::string& path, const char* key, long fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
    return v->get<long>();
}

bool optional_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(path + "." + key, "expected a boolean");
    return v->get<bool>();
}

std::vector<double> require_number_array(const json& obj, const std::string& path,
                                         const char* key) {
    const json* v = find(obj, key);
    if (!v) fail(path + "." + key, "missing required key");
    if (!v->is_array() || v->empty()) fail(path + "." + key, "expected a nonempty array");
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) fail(path + "." + key, "expected numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

void check_tol(double tol, const std::string& path) {
    if (!(tol >= 1e-13 && tol <= 1e-3)) fail(path + ".tol", "must lie in [1e-13, 1e-3]");
}

std::optional<ClassicalState> parse_initial(const json& obj, const std::string& path) {
    const json* v = find(obj, "initial");
    if (!v) return std::nullopt;
    if (!v->is_object()) fail(path + ".initial", "expected an object {x, xdot}");
    reject_unknown_keys(*v, path + ".initial", {"x", "xdot"});
    return ClassicalState{require_number(*v, path + ".initial", "x"),
                          require_number(*v, path + ".initial", "xdot")};
}

GridSpec parse_grid(const json& obj, const std::string& path, const char* key) {
    GridSpec grid;
    const json* v = find(obj, key);
    if (!v) return grid;
    const std::string p = path + "." + key;
    if (!v->is_object()) fail(p, "expected an object {length, n_points}");
    reject_unknown_keys(*v, p, {"length", "n_points"});
    grid.length = optional_number(*v, p, "length", 0.0);
    grid.n_points = optional_integer(*v, p, "n_points", 0);
    if (grid.length < 0.0) fail(p + ".length", "must be positive");
    if (grid.n_points != 0 && grid.n_points < 64) fail(p + ".n_points", "must be >= 64");
    return grid;
}

ModelParams parse_model(const json& doc) {
    const json* m = find(doc, "model");
    if (!m) fail("model", "missing required key");
    if (!m->is_object()) fail("model", "expected an object");
    reject_unknown_keys(*m, "model", {"omega", "a", "branch", "wall"});
    const double omega = require_number(*m, "model", "omega");
    const double a = require_number(*m, "model", "a");
    const double wall = optional_number(*m, "model", "wall", 1e-12);
    Branch branch = a > 0 ? Branch::positive : Branch::negative;
    if (const json* b = find(*m, "branch")) {
        if (!b->is_string()) fail("model.branch", "expected \"positive\" or \"negative\"");
        const std::string s = b->get<std::string>();
        if (s == "positive")
            branch = Branch::positive;
        else if (s == "negative")
            branch = Branch::negative;
        else
            fail("model.branch", "expected \"positive\" or \"negative\"");
    }
    try {
        return ModelParams(omega, a, branch, wall);
    } catch (const std::invalid_argument& e) {
        fail("model", e.what());
    }
}

std::optional<AmbiguityTriple> parse_ambiguity(const json& doc) {
    const json* m = find(doc, "ambiguity");
    if (!m) return std::nullopt;
    if (!m->is_object()) fail("ambiguity", "expected an object");
    reject_unknown_keys(*m, "ambiguity", {"alpha", "beta", "gamma"});
    const double alpha = require_number(*m, "ambiguity", "alpha");
    const double beta = require_number(*m, "ambiguity", "beta");
    try {
        if (find(*m, "gamma") != nullptr)
            return AmbiguityTriple(alpha, beta, optional_number(*m, "ambiguity", "gamma", 0.0));
        return AmbiguityTriple(alpha, beta);
    } catch (const std::invalid_argument& e) {
        fail("ambiguity", e.what());
    }
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config error: document root must be an object");
    reject_unknown_keys(doc, "",
                        {"model", "ambiguity", "m0", "simulate", "period_sweep", "spectrum",
                         "eigensolve", "wavefunction", "phase_portrait", "linearize_check"});

    RunConfig cfg(parse_model(doc));
    cfg.ambiguity = parse_ambiguity(doc);
    cfg.m0 = optional_number(doc, "", "m0", 1.0);
    if (!(cfg.m0 > 0.0)) fail("m0", "must be positive");
    cfg.resolved = doc;

    if (const json* s = find(doc, "simulate")) {
        const std::string path = "simulate";
        reject_unknown_keys(*s, path, {"initial", "energy", "theta0", "t_end", "tol", "samples"});
        SimulateSpec spec;
        spec.initial = parse_initial(*s, path);
        if (find(*s, "energy") != nullptr) spec.energy = require_number(*s, path, "energy");
        spec.theta0 = optional_number(*s, path, "theta0", 0.0);
        spec.t_end = require_number(*s, path, "t_end");
        spec.tol = optional_number(*s, path, "tol", 1e-10);
        spec.samples = optional_integer(*s, path, "samples", 2001);
        if (!spec.initial && !spec.energy)
            fail(path + ".initial", "missing required key (need `initial` or `energy`)");
        if (!(spec.t_end > 0.0)) fail(path + ".t_end", "must be positive");
        check_tol(spec.tol, path);
        if (spec.samples < 2) fail(path + ".samples", "must be >= 2");
        cfg.simulate = spec;
    }

    if (const json* s = find(doc, "period_sweep")) {
        const std::string path = "period_sweep";
        reject_unknown_keys(*s, path, {"energies", "tol", "periods"});
        PeriodSweepSpec spec;
        spec.energies = require_number_array(*s, path, "energies");
        spec.tol = optional_number(*s, path, "tol", 1e-10);
        spec.periods = optional_number(*s, path, "periods", 6.0);
        check_tol(spec.tol, path);
        if (!(spec.periods >= 4.0)) fail(path + ".periods", "must be >= 4");
        cfg.period_sweep = spec;
    }

    if (const json* s = find(doc, "spectrum")) {
        const std::string path = "spectrum";
        reject_unknown_keys(*s, path, {"levels", "refine", "xi_grid", "x_grid", "triples"});
        SpectrumSpec spec;
        spec.levels = static_cast<int>(optional_integer(*s, path, "levels", 6));
        spec.refine = optional_bool(*s, path, "refine", true);
        spec.xi_grid = parse_grid(*s, path, "xi_grid");
        spec.x_grid = parse_grid(*s, path, "x_grid");
        if (const json* t = find(*s, "triples")) {
            if (!t->is_array()) fail(path + ".triples", "expected an array of [alpha, beta]");
            for (const auto& pair : *t) {
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
                    !pair[1].is_number())
                    fail(path + ".triples", "expected [alpha, beta] pairs");
                spec.extra_triples.emplace_back(pair[0].get<double>(), pair[1].get<double>());
            }
        }
        if (spec.levels < 1) fail(path + ".levels", "must be >= 1");
        cfg.spectrum = spec;
    }

    if (const json* s = find(doc, "eigensolve")) {
        const std::string path = "eigensolve";
        reject_unknown_keys(*s, path, {"levels", "space", "refine", "xi_grid", "x_grid"});
        EigensolveSpec spec;
        spec.levels = static_cast<int>(optional_integer(*s, path, "levels", 6));
        spec.refine = optional_bool(*s, path, "refine", true);
        spec.xi_grid = parse_grid(*s, path, "xi_grid");
        spec.x_grid = parse_grid(*s, path, "x_grid");
        if (const json* sp = find(*s, "space")) {
            if (!sp->is_string()) fail(path + ".space", "expected \"xi\", \"x\" or \"both\"");
            spec.space = sp->get<std::string>();
            if (spec.space != "xi" && spec.space != "x" && spec.space != "both")
                fail(path + ".space", "expected \"xi\", \"x\" or \"both\"");
        }
        if (spec.levels < 1) fail(path + ".levels", "must be >= 1");
        cfg.eigensolve = spec;
    }

    if (const json* s = find(doc, "wavefunction")) {
        const std::string path = "wavefunction";
        reject_unknown_keys(*s, path, {"levels", "xi_max", "samples"});
        WavefunctionSpec spec;
        spec.levels = static_cast<int>(optional_integer(*s, path, "levels", 3));
        spec.xi_max = optional_number(*s, path, "xi_max", 0.0);
        spec.samples = optional_integer(*s, path, "samples", 4001);
        if (spec.levels < 1) fail(path + ".levels", "must be >= 1");
        if (spec.xi_max < 0.0) fail(path + ".xi_max", "must be positive");
        if (spec.samples < 16) fail(path + ".samples", "must be >= 16");
        cfg.wavefunction = spec;
    }

    if (const json* s = find(doc, "phase_portrait")) {
        const std::string path = "phase_portrait";
        reject_unknown_keys(*s, path, {"energies", "theta0", "periods", "samples", "tol"});
        PhasePortraitSpec spec;
        spec.energies = require_number_array(*s, path, "energies");
        spec.theta0 = optional_number(*s, path, "theta0", 0.0);
        spec.periods = optional_number(*s, path, "periods", 2.0);
        spec.samples = optional_integer(*s, path, "samples", 600);
        spec.tol = optional_number(*s, path, "tol", 1e-10);
        check_tol(spec.tol, path);
        if (!(spec.periods > 0.0)) fail(path + ".periods", "must be positive");
        if (spec.samples < 2) fail(path + ".samples", "must be >= 2");
        cfg.phase_portrait = spec;
    }

    if (const json* s = find(doc, "linearize_check")) {
        const std::string path = "linearize_check";
        reject_unknown_keys(*s, path,
                            {"energy", "initial", "theta0", "periods", "tol", "samples"});
        LinearizeCheckSpec spec;
        if (find(*s, "energy") != nullptr) spec.energy = require_number(*s, path, "energy");
        spec.initial = parse_initial(*s, path);
        spec.theta0 = optional_number(*s, path, "theta0", 0.0);
        spec.periods = optional_number(*s, path, "periods", 5.0);
        spec.tol = optional_number(*s, path, "tol", 1e-10);
        spec.samples = optional_integer(*s, path, "samples", 4096);
        if (!spec.energy && !spec.initial)
            fail(path + ".energy", "missing required key (need `energy` or `initial`)");
        check_tol(spec.tol, path);
        if (!(spec.periods > 0.0)) fail(path + ".periods", "must be positive");
        if (spec.samples < 32) fail(path + ".samples", "must be >= 32");
        cfg.linearize_check = spec;
    }

    return cfg;
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "': expected key.path=value");
    const std::string key_path = assignment.substr(0, eq);
    const std::string value_text = assignment.substr(eq + 1);

    nlohmann::json value;
    try {
        value = nlohmann::json::parse(value_text);
    } catch (const nlohmann::json::parse_error&) {
        value = value_text;  // plain string
    }

    nlohmann::json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key_path.find('.', start);
        const std::string key = key_path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("override '" + assignment + "': empty key segment");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (!node->is_object() && !node->is_null())
            throw ConfigError("override '" + assignment + "': '" + key +
                              "' is not an object");
        start = dot + 1;
    }
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    for (const std::string& o : overrides) apply_override(doc, o);
    return parse_run_config(doc);
}

}  // namespace pdmosc::io
