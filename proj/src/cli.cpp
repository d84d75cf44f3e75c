#include "nodal/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nodal/bifurcation.hpp"
#include "nodal/error.hpp"
#include "nodal/solutions.hpp"
#include "nodal/symmetry.hpp"

namespace nodal::cli {

namespace {

using json = nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;

class ExprParser {
public:
    explicit ExprParser(const std::string& s) : s_(s) {}

    double parse() {
        const double v = expr();
        skip();
        if (pos_ != s_.size()) fail();
        return v;
    }

private:
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail() const { throw ConfigError("cannot parse number '" + s_ + "'"); }

    double expr() {
        double v = term();
        for (;;) {
            if (eat('+')) v += term();
            else if (eat('-')) v -= term();
            else return v;
        }
    }
    double term() {
        double v = factor();
        for (;;) {
            if (eat('*')) {
                v *= factor();
            } else if (eat('/')) {
                const double d = factor();
                if (d == 0.0) fail();
                v /= d;
            } else {
                return v;
            }
        }
    }
    double factor() {
        if (eat('-')) return -factor();
        if (eat('+')) return factor();
        if (eat('(')) {
            const double v = expr();
            if (!eat(')')) fail();
            return v;
        }
        skip();
        if (s_.compare(pos_, 2, "pi") == 0) {
            pos_ += 2;
            return kPi;
        }
        if (s_.compare(pos_, 2, "\xcf\x80") == 0) {  // UTF-8 pi
            pos_ += 2;
            return kPi;
        }
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail();
        pos_ += static_cast<std::size_t>(end - begin);
        // implicit product such as "2pi"
        skip();
        if (s_.compare(pos_, 2, "pi") == 0) {
            pos_ += 2;
            return v * kPi;
        }
        return v;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    std::string t = s.substr(a, b - a);
    if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') || (t.front() == '\'' && t.back() == '\''))) {
        t = t.substr(1, t.size() - 2);
    }
    return t;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "scenario", "output", "seed", "h", "h_list", "domain", "domain.kind", "domain.side", "domain.width",
        "domain.height", "domain.radius", "domain.inner", "domain.outer", "domain.lobe_radius",
        "domain.channel_width", "domain.channel_length", "nonlinearity.family", "nonlinearity.p",
        "nonlinearity.lambda", "flow.tau", "flow.kappa", "flow.residual_tol", "flow.max_steps", "flow.backtracking",
        "search.n_angles", "search.basin_tol", "search.newton_tol", "search.seed_max_steps", "lambda_offset",
        "lambda_max", "window.lo", "n_points", "alpha", "delta", "mp.eps", "mp.n_images", "string.n_images",
        "string.max_iter", "string.saddle_tol", "string.perturbation", "fss.tol", "dump_fields"};
    return keys;
}

void flatten(const json& j, const std::string& prefix, Config& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
        }
        return;
    }
    if (prefix.empty()) throw ConfigError("JSON config must be an object");
    if (j.is_array()) {
        std::string joined;
        for (const auto& e : j) {
            if (!joined.empty()) joined += ",";
            joined += e.is_string() ? e.get<std::string>() : e.dump();
        }
        out.set(prefix, joined);
    } else if (j.is_string()) {
        out.set(prefix, j.get<std::string>());
    } else if (j.is_null()) {
        throw ConfigError("null value for key '" + prefix + "'");
    } else {
        out.set(prefix, j.dump());
    }
}

double round12(double v) {
    if (!std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return round12(v);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

double parse_number(const std::string& text) { return ExprParser(trim(text)).parse(); }

Scenario parse_scenario(const std::string& name) {
    static const std::map<std::string, Scenario> table = {
        {"eig", Scenario::Eig},
        {"positive", Scenario::Positive},
        {"nodal", Scenario::Nodal},
        {"morse", Scenario::Morse},
        {"mp", Scenario::Mp},
        {"bifurcate", Scenario::Bifurcate},
        {"square-validate", Scenario::SquareValidate},
        {"disk-symmetry", Scenario::DiskSymmetry},
        {"dumbbell-gap", Scenario::DumbbellGap}};
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown scenario '" + name + "'");
    return it->second;
}

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Eig: return "eig";
        case Scenario::Positive: return "positive";
        case Scenario::Nodal: return "nodal";
        case Scenario::Morse: return "morse";
        case Scenario::Mp: return "mp";
        case Scenario::Bifurcate: return "bifurcate";
        case Scenario::SquareValidate: return "square-validate";
        case Scenario::DiskSymmetry: return "disk-symmetry";
        case Scenario::DumbbellGap: return "dumbbell-gap";
    }
    return "?";
}

Config Config::parse(const std::string& text) {
    Config c;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("invalid JSON config: ") + e.what());
        }
        flatten(j, "", c);
        return c;
    }
    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        c.set(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_number(const std::string& key, double fallback) const {
    return get_optional_number(key).value_or(fallback);
}

std::optional<double> Config::get_optional_number(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    try {
        return parse_number(it->second);
    } catch (const ConfigError&) {
        throw ConfigError("key '" + key + "': cannot parse number '" + it->second + "'");
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    const auto v = get_optional_number(key);
    if (!v) return fallback;
    if (*v != std::floor(*v) || std::abs(*v) > 1e9) throw ConfigError("key '" + key + "' must be an integer");
    return static_cast<int>(*v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "' must be a boolean");
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::string item;
    std::istringstream is(it->second);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.front() == '[') item.erase(0, 1);
        if (!item.empty() && item.back() == ']') item.pop_back();
        if (trim(item).empty()) continue;
        try {
            out.push_back(parse_number(item));
        } catch (const ConfigError&) {
            throw ConfigError("key '" + key + "': cannot parse list entry '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("key '" + key + "' is an empty list");
    return out;
}

void Config::reject_unknown_keys() const {
    for (const auto& [k, v] : values_) {
        if (!known_keys().count(k)) throw ConfigError("unknown config key '" + k + "'");
    }
}

namespace {

struct Check {
    std::string name;
    std::string status;
    std::string measured;
    std::string expected;
};

/// Everything resolved from the config before any computation starts.
struct Setup {
    DomainSpec domain;
    double h = 0.0;
    Nonlinearity spec = Nonlinearity::allen_cahn(5.2);
    bool lambda_given = false;
    FlowConfig flow;
    SearchConfig search;
    StringConfig string;
    double mp_eps = 0.05;
    int mp_images = 20;
    double fss_tol = 2e-2;
    double lambda_offset = 1.0;
    std::optional<double> lambda_max;
    double window_lo = 0.02;
    int n_points = 12;
    std::vector<double> alphas;
    std::vector<double> h_list;
    std::vector<double> deltas;
    bool dump_fields = true;
    int seed = 0;
};

bool is_square_pi(const DomainSpec& d) {
    const auto* s = std::get_if<Square>(&d);
    return s && std::abs(s->side - kPi) < 1e-12;
}

bool is_radial(const DomainSpec& d) { return std::holds_alternative<Disk>(d) || std::holds_alternative<Annulus>(d); }

class Runner {
public:
    Runner(Scenario sc, const Config& cfg, std::filesystem::path out, std::ostream& log)
        : sc_(sc), cfg_(cfg), out_(std::move(out)), log_(log) {}

    void prepare();
    void compute();
    int finish();

private:
    void check(const std::string& name, bool pass, const std::string& measured, const std::string& expected) {
        add({name, pass ? "PASS" : "FAIL", measured, expected});
    }
    void skip(const std::string& name, const std::string& reason) { add({name, "SKIP", reason, ""}); }
    void add(Check c) {
        log_ << c.status << ' ' << c.name << ": measured " << c.measured;
        if (!c.expected.empty()) log_ << ", expected " << c.expected;
        log_ << '\n';
        checks_.push_back(std::move(c));
    }
    void write_file(const std::string& name, const std::string& content) {
        std::ofstream f(out_ / name);
        if (!f) throw Error("cannot write " + (out_ / name).string());
        f << content;
        artifacts_.push_back(name);
    }
    void dump_field(const std::string& name, const ScalarField& u) {
        if (!setup_.dump_fields) return;
        std::ostringstream os;
        write_field(os, u);
        write_file(name, os.str());
    }

    MeshPtr mesh() const { return Mesh::build(setup_.domain, setup_.h); }
    json solution_json(const ScalarField& u, const SolveReport& rep, const std::string& seed,
                       const EigenspaceBasis* basis);
    json flow_json() const;

    void run_eig();
    void run_positive();
    void run_catalog(bool morse_checks);
    void run_mp();
    void run_branches(bool validate);
    void run_disk();
    void run_dumbbell();

    Scenario sc_;
    const Config& cfg_;
    std::filesystem::path out_;
    std::ostream& log_;
    Setup setup_;
    json summary_;
    std::vector<std::string> artifacts_;
    std::vector<Check> checks_;
};

void Runner::prepare() {
    cfg_.reject_unknown_keys();
    if (cfg_.has("scenario") && parse_scenario(cfg_.get_string("scenario", "")) != sc_) {
        throw ConfigError("config scenario '" + cfg_.get_string("scenario", "") + "' differs from the command line");
    }
    Setup& s = setup_;
    std::string default_kind = "square";
    if (sc_ == Scenario::DiskSymmetry) default_kind = "disk";
    if (sc_ == Scenario::DumbbellGap) default_kind = "dumbbell";
    const std::string kind = cfg_.get_string("domain.kind", cfg_.get_string("domain", default_kind));
    if (kind == "square") {
        s.domain = Square{cfg_.get_number("domain.side", kPi)};
    } else if (kind == "rectangle") {
        s.domain = Rectangle{cfg_.get_number("domain.width", kPi), cfg_.get_number("domain.height", kPi / 2)};
    } else if (kind == "disk") {
        s.domain = Disk{cfg_.get_number("domain.radius", 1.0)};
    } else if (kind == "annulus") {
        s.domain = Annulus{cfg_.get_number("domain.inner", 0.5), cfg_.get_number("domain.outer", 1.0)};
    } else if (kind == "dumbbell") {
        s.domain = Dumbbell{cfg_.get_number("domain.lobe_radius", 1.0), cfg_.get_number("domain.channel_width", 0.2),
                            cfg_.get_number("domain.channel_length", 1.0)};
    } else {
        throw ConfigError("unknown domain kind '" + kind + "'");
    }
    try {
        validate(s.domain);
    } catch (const MeshError& e) {
        throw ConfigError(e.what());
    }
    if ((sc_ == Scenario::Bifurcate || sc_ == Scenario::SquareValidate) && !is_square_pi(s.domain)) {
        throw ConfigError(scenario_name(sc_) + " needs the square of side pi");
    }
    if (sc_ == Scenario::DiskSymmetry && !is_radial(s.domain)) {
        throw ConfigError("disk-symmetry needs a disk or annulus domain");
    }
    if (sc_ == Scenario::DumbbellGap && !std::holds_alternative<Dumbbell>(s.domain)) {
        throw ConfigError("dumbbell-gap needs a dumbbell domain");
    }

    double h_default = kPi / 64;
    if (sc_ == Scenario::Bifurcate || sc_ == Scenario::SquareValidate) h_default = kPi / 96;
    if (is_radial(s.domain)) h_default = 1.0 / 32;
    if (std::holds_alternative<Dumbbell>(s.domain)) h_default = 0.025;
    if (!is_square_pi(s.domain) && std::holds_alternative<Square>(s.domain)) {
        h_default = std::get<Square>(s.domain).side / 64;
    }
    s.h = cfg_.get_number("h", h_default);
    if (!(s.h > 0)) throw ConfigError("h must be positive");

    const std::string family = cfg_.get_string("nonlinearity.family", "allen_cahn");
    double lambda_default = 5.2;
    if (sc_ == Scenario::DumbbellGap) lambda_default = 20.0;
    s.lambda_given = cfg_.has("nonlinearity.lambda");
    try {
        if (family == "allen_cahn") {
            s.spec = Nonlinearity::allen_cahn(cfg_.get_number("nonlinearity.lambda", lambda_default),
                                              cfg_.get_number("nonlinearity.p", 3.0));
        } else if (family == "power") {
            if (cfg_.has("nonlinearity.lambda")) throw ConfigError("nonlinearity.lambda does not apply to power");
            s.spec = Nonlinearity::power(cfg_.get_number("nonlinearity.p", 0.5));
        } else {
            throw ConfigError("unknown nonlinearity.family '" + family + "'");
        }
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    if ((sc_ == Scenario::Bifurcate || sc_ == Scenario::SquareValidate || sc_ == Scenario::DiskSymmetry ||
         sc_ == Scenario::DumbbellGap || sc_ == Scenario::Mp) &&
        !s.spec.is_c1()) {
        throw ConfigError(scenario_name(sc_) + " needs the allen_cahn family");
    }
    if ((sc_ == Scenario::Bifurcate || sc_ == Scenario::SquareValidate) && s.spec.p() != 3.0) {
        throw ConfigError(scenario_name(sc_) + " needs p = 3");
    }

    s.flow.tau = cfg_.get_number("flow.tau", s.flow.tau);
    const std::string kappa = cfg_.get_string("flow.kappa", "auto");
    if (kappa != "auto") s.flow.kappa = parse_number(kappa);
    s.flow.residual_tol = cfg_.get_optional_number("flow.residual_tol");
    s.flow.max_steps = cfg_.get_int("flow.max_steps", s.flow.max_steps);
    s.flow.backtracking = cfg_.get_bool("flow.backtracking", true);
    try {
        validate(s.flow);
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    s.search.flow = s.flow;
    s.search.n_angles = cfg_.get_int("search.n_angles", s.search.n_angles);
    s.search.basin_tol = cfg_.get_number("search.basin_tol", s.search.basin_tol);
    s.search.newton_tol = cfg_.get_number("search.newton_tol", s.search.newton_tol);
    s.search.seed_max_steps = cfg_.get_int("search.seed_max_steps", s.search.seed_max_steps);
    if (s.search.n_angles < 1 || !(s.search.basin_tol > 0) || !(s.search.newton_tol > 0)) {
        throw ConfigError("search settings must be positive");
    }
    s.string.n_images = cfg_.get_int("string.n_images", s.string.n_images);
    s.string.max_iter = cfg_.get_int("string.max_iter", s.string.max_iter);
    s.string.saddle_tol = cfg_.get_number("string.saddle_tol", s.string.saddle_tol);
    s.string.perturbation = cfg_.get_number("string.perturbation", s.string.perturbation);
    if (s.string.n_images < 3) throw ConfigError("string.n_images must be >= 3");
    s.mp_eps = cfg_.get_number("mp.eps", s.mp_eps);
    s.mp_images = cfg_.get_int("mp.n_images", s.mp_images);
    if (!(s.mp_eps > 0) || s.mp_images < 3) throw ConfigError("mp.eps must be positive and mp.n_images >= 3");
    s.fss_tol = cfg_.get_number("fss.tol", s.fss_tol);
    s.lambda_offset = cfg_.get_number("lambda_offset", s.lambda_offset);
    s.lambda_max = cfg_.get_optional_number("lambda_max");
    s.window_lo = cfg_.get_number("window.lo", s.window_lo);
    s.n_points = cfg_.get_int("n_points", s.n_points);
    if (s.n_points < 1) throw ConfigError("n_points must be >= 1");
    s.alphas = cfg_.get_list("alpha", {0.0, kPi / 4});
    const std::vector<double> h_fallback = sc_ == Scenario::SquareValidate ? std::vector<double>{kPi / 48, kPi / 64}
                                                                           : std::vector<double>{kPi / 16, kPi / 32, kPi / 64};
    s.h_list = cfg_.get_list("h_list", h_fallback);
    s.deltas = cfg_.get_list("delta", {0.2, 0.1, 0.05});
    s.dump_fields = cfg_.get_bool("dump_fields", true);
    s.seed = cfg_.get_int("seed", 0);

    // geometry problems are configuration errors
    try {
        if (sc_ == Scenario::DumbbellGap) {
            const auto& d = std::get<Dumbbell>(s.domain);
            for (double delta : s.deltas) Mesh::build(Dumbbell{d.lobe_radius, delta, d.channel_length}, s.h);
        } else {
            Mesh::build(s.domain, s.h);
        }
        if (sc_ == Scenario::Eig || sc_ == Scenario::SquareValidate) {
            for (double hh : s.h_list) Mesh::build(s.domain, hh);
        }
    } catch (const MeshError& e) {
        throw ConfigError(e.what());
    }

    std::filesystem::create_directories(out_);
    summary_["scenario"] = scenario_name(sc_);
    summary_["domain"] = domain_name(s.domain);
    summary_["h"] = num(s.h);
    summary_["nonlinearity"] = s.spec.describe();
    summary_["seed"] = s.seed;
}

json Runner::flow_json() const {
    json j;
    j["tau"] = num(setup_.flow.tau);
    j["kappa"] = num(resolve_kappa(setup_.flow, setup_.spec));
    j["residual_tol"] = setup_.flow.residual_tol ? num(*setup_.flow.residual_tol) : json("auto");
    j["max_steps"] = setup_.flow.max_steps;
    j["backtracking"] = setup_.flow.backtracking;
    return j;
}

json Runner::solution_json(const ScalarField& u, const SolveReport& rep, const std::string& seed,
                           const EigenspaceBasis* basis) {
    json j;
    j["energy"] = num(rep.energy);
    if (setup_.spec.is_c1()) {
        const MorseResult m = morse_index(u, setup_.spec);
        j["morse"] = m.index;
        j["zeros_flagged"] = m.zeros_flagged;
    } else {
        j["morse"] = nullptr;
        j["zeros_flagged"] = nullptr;
    }
    j["sign_class"] = to_string(rep.sign_class);
    j["nodal_domains"] = nodal_domains(u);
    j["symmetry_tags"] = symmetry_tags(u, 1e-6, setup_.fss_tol);
    j["residual"] = num(rep.residual);
    j["sup_norm"] = num(u.sup_norm());
    if (!seed.empty()) j["seed"] = seed;
    if (basis && is_square_pi(setup_.domain)) {
        const BranchClass bc = classify_square_branch(u, *basis);
        j["type"] = to_string(bc.type);
        j["alpha_deg"] = num(bc.alpha * 180 / kPi);
    }
    return j;
}

void Runner::run_eig() {
    const MeshPtr m = mesh();
    const EigenspaceBasis b = second_eigenspace(m);
    summary_["nodes"] = m->size();
    summary_["lambda1h"] = num(b.lambda1h);
    summary_["lambda2h"] = num(b.lambda2h);
    summary_["lambda3h"] = num(b.lambda3h);
    summary_["lambda2_double"] = b.degenerate;
    if (!is_square_pi(setup_.domain)) {
        skip("square spectrum", "analytic reference only for the square of side pi");
        return;
    }
    check("lambda1h near 2", std::abs(b.lambda1h - 2.0) <= 1e-2, fmt(b.lambda1h), "2 +- 1e-2");
    check("lambda2h near 5", std::abs(b.lambda2h - 5.0) <= 3e-2, fmt(b.lambda2h), "5 +- 3e-2");
    check("lambda2h double", b.degenerate, b.degenerate ? "double" : "simple", "double");

    std::vector<double> hs = setup_.h_list;
    std::sort(hs.rbegin(), hs.rend());
    json conv = json::array();
    std::vector<double> e1;
    std::vector<double> e2;
    for (double hh : hs) {
        const auto eig = smallest_eigs(neg_laplacian(*Mesh::build(setup_.domain, hh)), 2);
        conv.push_back({{"h", num(hh)}, {"lambda1h", num(eig[0].value)}, {"lambda2h", num(eig[1].value)}});
        e1.push_back(std::abs(eig[0].value - 2.0));
        e2.push_back(std::abs(eig[1].value - 5.0));
    }
    summary_["convergence"] = conv;
    if (hs.size() >= 2) {
        const std::size_t n = hs.size();
        const double lr = std::log(hs[n - 2] / hs[n - 1]);
        const double r1 = std::log(e1[n - 2] / e1[n - 1]) / lr;
        const double r2 = std::log(e2[n - 2] / e2[n - 1]) / lr;
        summary_["rate_lambda1"] = num(r1);
        summary_["rate_lambda2"] = num(r2);
        check("lambda1h convergence rate", std::abs(r1 - 2.0) <= 0.2, fmt(r1), "2.0 +- 0.2");
        check("lambda2h convergence rate", std::abs(r2 - 2.0) <= 0.2, fmt(r2), "2.0 +- 0.2");
    }
}

void Runner::run_positive() {
    const MeshPtr m = mesh();
    const Nonlinearity& spec = setup_.spec;
    const PositiveSolution ps = positive_solution(m, spec, setup_.flow, setup_.search.newton_tol);
    const SolveReport& r = ps.report;
    summary_["flow"] = flow_json();
    if (spec.is_allen_cahn()) summary_["lambda"] = num(spec.lambda());
    summary_["lambda1h"] = num(ps.lambda1h);
    summary_["energy"] = num(r.energy);
    summary_["sup_norm"] = num(r.field.sup_norm());
    summary_["residual"] = num(r.residual);
    summary_["steps"] = r.steps;
    summary_["sign_class"] = to_string(r.sign_class);
    summary_["cross_check"] = num(ps.cross_check);
    dump_field("w.txt", r.field);
    if (!ps.assumptions_hold) {
        check("decays to zero without a positive solution", r.sign_class == SignClass::Zero, to_string(r.sign_class),
              "zero");
        return;
    }
    check("positive solution", r.sign_class == SignClass::Positive && r.field.min() > 0, to_string(r.sign_class),
          "positive");
    const double cross_tol = spec.is_c1() ? 1e-6 : ps.cross_check_tol;
    check("uniqueness cross-check", ps.cross_check <= cross_tol, fmt(ps.cross_check), "<= " + fmt(cross_tol));
    check("negative energy", r.energy < 0, fmt(r.energy), "< 0");
    if (spec.is_c1()) {
        if (auto sf = spec.s_f()) {
            check("sup bound", r.field.sup_norm() <= *sf + 1e-8, fmt(r.field.sup_norm()), "<= 1 + 1e-8");
        }
        const MorseResult mi = morse_index(r.field, spec);
        summary_["morse"] = mi.index;
        check("Morse index of w", mi.index == 0 && mi.zeros_flagged == 0, std::to_string(mi.index), "0");
    } else {
        bool refused = false;
        try {
            newton_refine(r.field, spec, 1e-10);
        } catch (const NotC1Error&) {
            refused = true;
        }
        bool morse_refused = false;
        try {
            morse_index(r.field, spec);
        } catch (const NotC1Error&) {
            morse_refused = true;
        }
        check("Newton and Morse refuse a non-C1 family", refused && morse_refused,
              refused && morse_refused ? "refused" : "accepted", "refused");
    }
}

void Runner::run_catalog(bool morse_checks) {
    const MeshPtr m = mesh();
    const Nonlinearity& spec = setup_.spec;
    const EigenspaceBasis basis = second_eigenspace(m);
    const AssumptionReport ar = check_assumptions(spec, basis.lambda1h, basis.lambda2h);
    summary_["flow"] = flow_json();
    if (spec.is_allen_cahn()) summary_["lambda"] = num(spec.lambda());
    summary_["lambda2h"] = num(basis.lambda2h);

    std::optional<PositiveSolution> pos;
    if (ar.a3) {
        pos = positive_solution(m, spec, setup_.flow, setup_.search.newton_tol);
        summary_["energy_w"] = num(pos->report.energy);
    }
    const NodalCatalog cat = nodal_search(m, spec, {}, setup_.search, &basis);
    json sols = json::array();
    for (std::size_t i = 0; i < cat.entries.size(); ++i) {
        const auto& e = cat.entries[i];
        sols.push_back(solution_json(e.report.field, e.report, e.seed, &basis));
        dump_field("nodal_" + std::to_string(i) + ".txt", e.report.field);
    }
    summary_["c_nod"] = cat.empty() ? json(nullptr) : num(cat.c_nod);
    summary_["c_mp_est"] = nullptr;
    summary_["gap"] = nullptr;
    summary_["best"] = cat.best;
    summary_["solutions"] = sols;
    if (!cat.note.empty()) summary_["note"] = cat.note;

    if (!ar.a3prime) {
        check("no nodal solutions below lambda2", cat.empty(), std::to_string(cat.entries.size()) + " entries", "0");
        return;
    }
    check("nodal catalog nonempty", !cat.empty(), std::to_string(cat.entries.size()) + " entries", ">= 1");
    if (cat.empty()) return;
    if (pos) {
        const ScalarField& w = pos->report.field;
        double excess = -INFINITY;
        for (const auto& e : cat.entries) {
            for (std::size_t k = 0; k < w.size(); ++k) excess = std::max(excess, std::abs(e.report.field[k]) - w[k]);
        }
        check("nodal entries inside [-w, w]", excess <= 1e-6, fmt(excess), "max(|u| - w) <= 1e-6");
        check("m <= c_nod < 0", pos->report.energy <= cat.c_nod && cat.c_nod < 0,
              fmt(pos->report.energy) + " <= " + fmt(cat.c_nod), "m <= c_nod < 0");
    }
    const bool near_l2 = spec.is_allen_cahn() && spec.lambda() - basis.lambda2h <= 0.4;
    if (is_square_pi(setup_.domain) && near_l2) {
        const BranchClass best = classify_square_branch(cat.entries[cat.best].report.field, basis);
        check("least-energy nodal solution is type M", best.type == BranchType::M, to_string(best.type), "M");
        check("four sign pairs", cat.entries.size() >= 4, std::to_string(cat.entries.size()), ">= 4");
    }
    if (!morse_checks || !spec.is_c1()) return;
    if (pos) {
        const MorseResult mw = morse_index(pos->report.field, spec);
        check("Morse index of w", mw.index == 0, std::to_string(mw.index), "0");
    }
    const MorseResult mb = morse_index(cat.entries[cat.best].report.field, spec);
    check("least-energy nodal Morse index <= 1", mb.index <= 1, std::to_string(mb.index), "<= 1");
    if (is_square_pi(setup_.domain) && near_l2) {
        for (const auto& e : cat.entries) {
            const BranchClass bc = classify_square_branch(e.report.field, basis);
            const MorseResult mi = morse_index(e.report.field, spec);
            const int want = bc.type == BranchType::M ? 1 : 2;
            check("Morse index of type " + to_string(bc.type) + " (" + e.seed + ")",
                  bc.type != BranchType::Other && mi.index == want && mi.zeros_flagged == 0,
                  std::to_string(mi.index) + " (zeros " + std::to_string(mi.zeros_flagged) + ")",
                  std::to_string(want));
        }
    }
}

void Runner::run_mp() {
    const MeshPtr m = mesh();
    const Nonlinearity& spec = setup_.spec;
    const EigenspaceBasis basis = second_eigenspace(m);
    summary_["flow"] = flow_json();
    summary_["lambda"] = num(spec.lambda());
    const PositiveSolution pos = positive_solution(m, spec, setup_.flow, setup_.search.newton_tol);
    const NodalCatalog cat = nodal_search(m, spec, {}, setup_.search, &basis);
    summary_["energy_w"] = num(pos.report.energy);
    if (cat.empty()) {
        summary_["c_nod"] = nullptr;
        summary_["c_mp_est"] = nullptr;
        summary_["gap"] = nullptr;
        summary_["solutions"] = json::array();
        check("nodal catalog nonempty", false, "0 entries", ">= 1");
        return;
    }
    const SolveReport& best = cat.entries[cat.best].report;
    const PathEstimate cp = constructive_mp_path(best.field, pos.report.field, spec, setup_.flow,
                                                 setup_.mp_eps * best.field.sup_norm(), setup_.mp_images);
    const PathEstimate sp = string_saddle(pos.report.field, basis.degenerate ? basis.psi2 : basis.psi1, spec,
                                          setup_.flow, setup_.string);
    auto path_csv = [](const PathEstimate& p) {
        std::string s = "index,energy\n";
        char buf[64];
        for (std::size_t i = 0; i < p.energies.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%.12g\n", i, p.energies[i]);
            s += buf;
        }
        return s;
    };
    write_file("path_constructive.csv", path_csv(cp));
    write_file("path_string.csv", path_csv(sp));
    summary_["c_nod"] = num(cat.c_nod);
    summary_["c_mp_est"] = num(sp.max_energy);
    summary_["gap"] = num(sp.max_energy - cat.c_nod);
    summary_["c_mp_constructive"] = num(cp.max_energy);
    summary_["certificate"] = cp.certificate;
    summary_["string_iterations"] = sp.iterations;
    summary_["string_residual"] = num(sp.saddle_residual);
    summary_["solutions"] = json::array({solution_json(best.field, best, cat.entries[cat.best].seed, &basis)});
    if (!cp.note.empty()) summary_["constructive_note"] = cp.note;
    if (!sp.note.empty()) summary_["string_note"] = sp.note;
    check("constructive path certifies c_mp = c_nod", cp.certificate,
          "max " + fmt(cp.max_energy) + " vs " + fmt(cat.c_nod), "max <= c_nod + 1e-3 |c_nod|");
    check("string method converged", sp.ok, "residual " + fmt(sp.saddle_residual),
          "<= " + fmt(setup_.string.saddle_tol));
    const double tol = 1e-3 * std::abs(cat.c_nod);
    check("c_nod <= c_mp_est", cat.c_nod <= sp.max_energy + tol, fmt(cat.c_nod) + " <= " + fmt(sp.max_energy),
          "c_nod <= c_mp_est + 1e-3 |c_nod|");
    if (!std::holds_alternative<Dumbbell>(setup_.domain)) {
        const double rel = std::abs(sp.max_energy - cat.c_nod) / std::abs(cat.c_nod);
        check("string saddle equals c_nod", rel <= 1e-2, fmt(rel), "relative difference <= 1e-2");
    }
}

void Runner::run_branches(bool validate) {
    const MeshPtr m = mesh();
    const EigenspaceBasis basis = second_eigenspace(m);
    summary_["lambda2h"] = num(basis.lambda2h);
    const double hi = setup_.lambda_max ? *setup_.lambda_max - basis.lambda2h : 0.4;
    if (!(hi > setup_.window_lo)) throw ConfigError("lambda_max must exceed lambda2h + window.lo");
    const std::vector<double> grid = default_lambda_grid(basis.lambda2h, setup_.window_lo, hi, setup_.n_points);
    ContinuationConfig cc;
    cc.search = setup_.search;

    std::vector<Branch> branches(setup_.alphas.size());
    for (std::size_t i = 0; i < branches.size(); ++i) {
        branches[i] = continue_branch(m, basis, setup_.alphas[i], grid, std::nullopt, cc);
    }
    json jb = json::array();
    json sig_hat = json::array();
    json sig_an = json::array();
    json r_obs = json::array();
    json r_exp = json::array();
    json alphas = json::array();
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const Branch& br = branches[i];
        const double a = setup_.alphas[i];
        const double deg = a * 180 / kPi;
        char name[64];
        std::snprintf(name, sizeof name, "branch_alpha%g.csv", round12(deg));
        write_file(name, branch_csv(br));
        const double sa = analytic_sigma(a);
        const auto ratios = energy_ratio_check(br);
        const double expected = expected_energy_ratio(sa);
        const double observed = ratios.empty() ? NAN : ratios.front().ratio;
        double identity = 0.0;
        for (const auto& p : br.points) identity = std::max(identity, energy_identity_check(p));
        json o;
        o["alpha_deg"] = num(deg);
        o["points"] = br.points.size();
        o["truncated"] = br.truncated;
        if (!br.note.empty()) o["note"] = br.note;
        o["sigma_hat"] = br.points.size() >= 4 ? num(br.sigma_hat) : json(nullptr);
        o["sigma_stderr"] = br.points.size() >= 4 ? num(br.sigma_stderr) : json(nullptr);
        o["sigma_analytic"] = num(sa);
        o["ratio_limit_observed"] = num(observed);
        o["ratio_limit_expected"] = num(expected);
        o["energy_identity_max"] = num(identity);
        o["csv"] = name;
        jb.push_back(o);
        alphas.push_back(num(deg));
        sig_hat.push_back(o["sigma_hat"]);
        sig_an.push_back(num(sa));
        r_obs.push_back(num(observed));
        r_exp.push_back(num(expected));

        const std::string tag = "alpha=" + fmt(deg) + "deg";
        check("branch " + tag + " complete", !br.truncated && br.points.size() == grid.size(),
              std::to_string(br.points.size()) + " points" + (br.note.empty() ? "" : " (" + br.note + ")"),
              std::to_string(grid.size()));
        if (br.points.size() >= 4) {
            const double rel = std::abs(br.sigma_hat / sa - 1.0);
            check("sigma " + tag, rel <= 0.07, fmt(br.sigma_hat) + " (rel " + fmt(rel) + ")",
                  fmt(sa) + " within 7%");
        }
        const BranchType want = std::abs(std::sin(2 * a)) < 0.5 ? BranchType::M : BranchType::D;
        const int want_morse = want == BranchType::M ? 1 : 2;
        bool types = !br.points.empty();
        bool morse = !br.points.empty();
        bool increasing = true;
        for (std::size_t k = 0; k < br.points.size(); ++k) {
            types = types && br.points[k].type == want;
            morse = morse && br.points[k].morse == want_morse && br.points[k].zeros_flagged == 0;
            if (k > 0) increasing = increasing && std::abs(br.points[k].s) > std::abs(br.points[k - 1].s);
        }
        check("type " + tag, types, types ? to_string(want) : "mixed", to_string(want));
        check("Morse index along " + tag, morse, morse ? std::to_string(want_morse) : "differs",
              std::to_string(want_morse));
        check("amplitude increases with lambda " + tag, increasing, increasing ? "yes" : "no", "yes");
        check("energy identity " + tag, identity <= 1e-4, fmt(identity), "<= 1e-4");
        if (validate && !ratios.empty()) {
            const double rel = std::abs(observed / expected - 1.0);
            check("energy ratio at smallest lambda " + tag, rel <= 0.1, fmt(observed) + " (rel " + fmt(rel) + ")",
                  fmt(expected) + " within 10%");
        }
    }
    summary_["branches"] = jb;
    summary_["alpha_deg"] = alphas;
    summary_["sigma_hat"] = sig_hat;
    summary_["sigma_analytic"] = sig_an;
    summary_["ratio_limit_observed"] = r_obs;
    summary_["ratio_limit_expected"] = r_exp;
    if (!validate) return;

    // Morse indices at lambda2h + 0.2 on two further meshes
    json mj = json::array();
    for (double hh : setup_.h_list) {
        const MeshPtr mm = Mesh::build(setup_.domain, hh);
        const EigenspaceBasis bb = second_eigenspace(mm);
        for (double a : {0.0, kPi / 4}) {
            const Branch one = continue_branch(mm, bb, a, {bb.lambda2h + 0.2}, std::nullopt, cc);
            const int want = a == 0.0 ? 1 : 2;
            const bool ok = one.points.size() == 1 && one.points[0].morse == want && one.points[0].zeros_flagged == 0;
            const std::string got =
                one.points.empty() ? "no solution" : std::to_string(one.points[0].morse) + " (zeros " +
                                                          std::to_string(one.points[0].zeros_flagged) + ")";
            mj.push_back({{"h", num(hh)},
                          {"alpha_deg", num(a * 180 / kPi)},
                          {"morse", one.points.empty() ? json(nullptr) : json(one.points[0].morse)},
                          {"zeros_flagged", one.points.empty() ? json(nullptr) : json(one.points[0].zeros_flagged)}});
            check(std::string("Morse index type ") + (want == 1 ? "M" : "D") + " at h=" + fmt(hh), ok, got,
                  std::to_string(want) + " (zeros 0)");
        }
    }
    summary_["morse_check"] = mj;

    // least-energy entry of the seed catalog at lambda2h + 0.2
    const double lam = basis.lambda2h + 0.2;
    const Nonlinearity spec = Nonlinearity::allen_cahn(lam, 3.0);
    const MeshPtr mc = Mesh::build(setup_.domain, setup_.h_list.front());
    const EigenspaceBasis bc = second_eigenspace(mc);
    const NodalCatalog cat = nodal_search(mc, spec, {}, setup_.search, &bc);
    json sols = json::array();
    for (const auto& e : cat.entries) {
        json j = solution_json(e.report.field, e.report, e.seed, &bc);
        j["morse"] = morse_index(e.report.field, spec).index;
        sols.push_back(j);
    }
    summary_["catalog_lambda"] = num(lam);
    summary_["catalog_h"] = num(setup_.h_list.front());
    summary_["c_nod"] = cat.empty() ? json(nullptr) : num(cat.c_nod);
    summary_["solutions"] = sols;
    const std::string best = cat.empty() ? "none" : to_string(classify_square_branch(cat.entries[cat.best].report.field, bc).type);
    check("least-energy catalog entry is type M", best == "M", best, "M");

    // |J_M| > |J_D| along the window
    if (branches.size() >= 2) {
        const Branch* bm = nullptr;
        const Branch* bd = nullptr;
        for (std::size_t i = 0; i < branches.size(); ++i) {
            if (std::abs(std::sin(2 * setup_.alphas[i])) < 0.5) bm = bm ? bm : &branches[i];
            else bd = bd ? bd : &branches[i];
        }
        if (bm && bd) {
            bool below = bm->points.size() == bd->points.size() && !bm->points.empty();
            for (std::size_t k = 0; below && k < bm->points.size(); ++k) {
                below = bm->points[k].energy_J < bd->points[k].energy_J;
            }
            check("type M energy below type D", below, below ? "yes" : "no", "yes at every lambda");
        }
    }
}

void Runner::run_disk() {
    const MeshPtr m = mesh();
    const EigenspaceBasis basis = second_eigenspace(m);
    const double lam = setup_.lambda_given ? setup_.spec.lambda() : basis.lambda2h + setup_.lambda_offset;
    const Nonlinearity spec = Nonlinearity::allen_cahn(lam, setup_.spec.p());
    setup_.spec = spec;
    summary_["nonlinearity"] = spec.describe();
    summary_["lambda"] = num(lam);
    summary_["lambda2h"] = num(basis.lambda2h);
    summary_["flow"] = flow_json();
    const PositiveSolution pos = positive_solution(m, spec, setup_.flow, setup_.search.newton_tol);
    const NodalCatalog cat = nodal_search(m, spec, {}, setup_.search, &basis);
    json sols = json::array();
    for (std::size_t i = 0; i < cat.entries.size(); ++i) {
        sols.push_back(solution_json(cat.entries[i].report.field, cat.entries[i].report, cat.entries[i].seed, nullptr));
    }
    summary_["energy_w"] = num(pos.report.energy);
    summary_["solutions"] = sols;
    summary_["best"] = cat.best;
    if (cat.empty()) {
        summary_["c_nod"] = nullptr;
        summary_["c_mp_est"] = nullptr;
        summary_["gap"] = nullptr;
        check("nodal catalog nonempty", false, "0 entries", ">= 1");
        return;
    }
    const ScalarField& u = cat.entries[cat.best].report.field;
    dump_field("nodal_best.txt", u);
    const SymmetryReport sr = foliated_schwarz_check(u, 24, 90, setup_.fss_tol);
    json js;
    js["axis_deg"] = num(sr.axis_angle * 180 / kPi);
    js["axial_deviation"] = num(sr.axial_deviation);
    js["monotonicity_violation"] = num(sr.monotonicity_violation);
    js["min_slope"] = num(sr.min_slope);
    js["radial_variance"] = num(sr.radial_variance);
    js["diameter_odd_deviation"] = num(sr.diameter_odd_deviation);
    js["is_foliated_schwarz"] = sr.is_foliated_schwarz;
    js["rings"] = sr.rings_used;
    summary_["symmetry"] = js;

    const double tol = setup_.fss_tol;
    check("nonradial", sr.radial_variance > 10 * tol, fmt(sr.radial_variance), "> " + fmt(10 * tol));
    check("foliated Schwarz symmetric", sr.is_foliated_schwarz,
          "axial " + fmt(sr.axial_deviation) + ", violation " + fmt(sr.monotonicity_violation), "both <= " + fmt(tol));
    check("odd across the detected diameter", sr.diameter_odd_deviation <= 0.02, fmt(sr.diameter_odd_deviation),
          "<= 0.02");
    const MorseResult mi = morse_index(u, spec);
    check("Morse index", mi.index == 1, std::to_string(mi.index) + " (zeros " + std::to_string(mi.zeros_flagged) + ")",
          "1");
    const int nd = nodal_domains(u);
    check("nodal domains", nd == 2, std::to_string(nd), "2");

    const PathEstimate cp = constructive_mp_path(u, pos.report.field, spec, setup_.flow, setup_.mp_eps * u.sup_norm(),
                                                 setup_.mp_images, 1e-2 * std::abs(cat.c_nod));
    summary_["c_nod"] = num(cat.c_nod);
    summary_["c_mp_est"] = num(cp.max_energy);
    summary_["gap"] = num(cp.max_energy - cat.c_nod);
    summary_["certificate"] = cp.certificate;
    if (!cp.note.empty()) summary_["constructive_note"] = cp.note;
    const double rel = (cp.max_energy - cat.c_nod) / std::abs(cat.c_nod);
    check("mountain-pass path certifies c_mp = c_nod", cp.certificate, "relative excess " + fmt(rel), "<= 1e-2");
}

void Runner::run_dumbbell() {
    const auto& d = std::get<Dumbbell>(setup_.domain);
    const Nonlinearity& spec = setup_.spec;
    summary_["lambda"] = num(spec.lambda());
    summary_["flow"] = flow_json();
    std::vector<double> deltas = setup_.deltas;
    std::sort(deltas.rbegin(), deltas.rend());
    json scan = json::array();
    std::optional<DumbbellResult> chosen;
    for (double delta : deltas) {
        DumbbellResult r =
            dumbbell_experiment(d.lobe_radius, delta, d.channel_length, setup_.h, spec, setup_.flow, setup_.string);
        json j;
        j["delta"] = num(delta);
        j["w_limit_nodal"] = r.w_limit_nodal;
        j["energy_w"] = num(r.energy_w);
        j["c_nod"] = r.w_limit_nodal ? num(r.c_nod) : json(nullptr);
        j["c_mp_est"] = r.w_limit_nodal ? num(r.c_mp_est) : json(nullptr);
        j["gap"] = r.w_limit_nodal ? num(r.gap) : json(nullptr);
        j["morse"] = r.w_limit_nodal ? json(r.morse_w_limit.index) : json(nullptr);
        j["zeros_flagged"] = r.w_limit_nodal ? json(r.morse_w_limit.zeros_flagged) : json(nullptr);
        j["dist_to_w"] = num(r.dist_to_w);
        j["dist_to_minus_w"] = num(r.dist_to_minus_w);
        j["string_iterations"] = r.path.iterations;
        if (!r.note.empty()) j["note"] = r.note;
        scan.push_back(j);
        char name[64];
        std::snprintf(name, sizeof name, "w_limit_delta%g.txt", round12(delta));
        dump_field(name, r.w_limit.field);
        if (r.w_limit_nodal) chosen = std::move(r);
    }
    summary_["scan"] = scan;
    if (!chosen) {
        summary_["c_nod"] = nullptr;
        summary_["c_mp_est"] = nullptr;
        summary_["gap"] = nullptr;
        summary_["solutions"] = json::array();
        check("nodal W-limit", false, "none of the channel widths", "at least one");
        return;
    }
    const DumbbellResult& r = *chosen;
    summary_["delta_selected"] = num(r.delta);
    summary_["c_nod"] = num(r.c_nod);
    summary_["c_mp_est"] = num(r.c_mp_est);
    summary_["gap"] = num(r.gap);
    summary_["solutions"] = json::array({solution_json(r.w_limit.field, r.w_limit, "W", nullptr)});
    const std::string at = " (delta=" + fmt(r.delta) + ")";
    check("Morse index of the W-limit" + at, r.morse_w_limit.index == 0,
          std::to_string(r.morse_w_limit.index) + " (zeros " + std::to_string(r.morse_w_limit.zeros_flagged) + ")",
          "0");
    check("string method converged" + at, r.path.ok, "residual " + fmt(r.path.saddle_residual),
          "<= " + fmt(setup_.string.saddle_tol));
    const double rel = r.gap / std::abs(r.c_nod);
    check("c_mp exceeds c_nod" + at, rel > 0.05, "gap/|c_nod| = " + fmt(rel), "> 0.05");
}

void Runner::compute() {
    switch (sc_) {
        case Scenario::Eig: run_eig(); break;
        case Scenario::Positive: run_positive(); break;
        case Scenario::Nodal: run_catalog(false); break;
        case Scenario::Morse: run_catalog(true); break;
        case Scenario::Mp: run_mp(); break;
        case Scenario::Bifurcate: run_branches(false); break;
        case Scenario::SquareValidate: run_branches(true); break;
        case Scenario::DiskSymmetry: run_disk(); break;
        case Scenario::DumbbellGap: run_dumbbell(); break;
    }
}

int Runner::finish() {
    json checks = json::array();
    bool failed = false;
    for (const auto& c : checks_) {
        checks.push_back({{"name", c.name}, {"status", c.status}, {"measured", c.measured}, {"expected", c.expected}});
        failed = failed || c.status == "FAIL";
    }
    summary_["checks"] = checks;
    artifacts_.push_back("summary.json");
    summary_["artifacts"] = artifacts_;
    std::ofstream f(out_ / "summary.json");
    if (!f) throw Error("cannot write summary.json");
    f << summary_.dump(2) << '\n';
    return failed ? 2 : 0;
}

}  // namespace

int run(Scenario scenario, const Config& config, const std::filesystem::path& out, std::ostream& log) {
    Runner runner(scenario, config, out, log);
    try {
        runner.prepare();
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return 3;
    }
    try {
        runner.compute();
        return runner.finish();
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace nodal::cli
