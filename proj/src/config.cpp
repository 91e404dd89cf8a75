#include "evolveq/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "evolveq/errors.hpp"

namespace evolveq {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> schema{
    {"experiment", {"preset", "elements", "horizon", "metric", "initial", "omega"}},
    {"load", {"name", "amplitude"}},
    {"ladder", {"slab_counts", "oracle_steps", "output_points"}},
    {"invariance", {"set", "lower", "upper", "radius", "offset", "samples", "time_samples"}},
    {"output", {"dir", "seed", "threads"}},
};

class Reader {
public:
    Reader(const pt::ptree& tree, std::string origin) : tree_(tree), origin_(std::move(origin)) {}

    [[nodiscard]] std::optional<std::string> text(const std::string& section, const std::string& key) const
    {
        const auto sec = tree_.get_child_optional(section);
        if (!sec) {
            return std::nullopt;
        }
        const auto value = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!value) {
            return std::nullopt;
        }
        if (value->empty()) {
            fail(section, key, "empty value");
        }
        return *value;
    }

    [[nodiscard]] std::optional<double> number(const std::string& section, const std::string& key) const
    {
        const auto s = text(section, key);
        if (!s) {
            return std::nullopt;
        }
        if (*s == "inf" || *s == "+inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (*s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        double v = 0.0;
        const auto [end, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
        if (ec != std::errc() || end != s->data() + s->size() || !std::isfinite(v)) {
            fail(section, key, "'" + *s + "' is not a number");
        }
        return v;
    }

    [[nodiscard]] std::optional<long long> integer(const std::string& section, const std::string& key) const
    {
        const auto s = text(section, key);
        if (!s) {
            return std::nullopt;
        }
        return parse_integer(section, key, *s);
    }

    [[nodiscard]] std::vector<int> integer_list(const std::string& section, const std::string& key) const
    {
        std::vector<int> out;
        const auto s = text(section, key);
        if (!s) {
            return out;
        }
        std::stringstream ss(*s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto first = item.find_first_not_of(" \t");
            const auto last = item.find_last_not_of(" \t");
            if (first == std::string::npos) {
                fail(section, key, "empty list entry");
            }
            const long long v = parse_integer(section, key, item.substr(first, last - first + 1));
            if (v < 1 || v > 1 << 20) {
                fail(section, key, "entries must be positive");
            }
            out.push_back(static_cast<int>(v));
        }
        return out;
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& why) const
    {
        throw Error(ErrorKind::config, origin_ + ": [" + section + "] " + key + ": " + why);
    }

private:
    long long parse_integer(const std::string& section, const std::string& key, const std::string& s) const
    {
        long long v = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || end != s.data() + s.size()) {
            fail(section, key, "'" + s + "' is not an integer");
        }
        return v;
    }

    const pt::ptree& tree_;
    std::string origin_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin)
{
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorKind::config, origin + ": line " + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [section, body] : tree) {
        const auto it = schema.find(section);
        if (it == schema.end()) {
            throw Error(ErrorKind::config, origin + ": unknown section or top-level key '" + section + "'");
        }
        for (const auto& [key, value] : body) {
            if (!value.empty()) {
                throw Error(ErrorKind::config, origin + ": [" + section + "] " + key + ": nested keys are not allowed");
            }
            if (it->second.count(key) == 0) {
                throw Error(ErrorKind::config, origin + ": [" + section + "] unknown key '" + key + "'");
            }
        }
    }

    const Reader r(tree, origin);
    ExperimentConfig c;
    const auto preset = r.text("experiment", "preset");
    if (!preset) {
        throw Error(ErrorKind::config, origin + ": [experiment] preset is required");
    }
    if (!has_preset(*preset)) {
        throw Error(ErrorKind::unknown_preset, origin + ": unknown preset '" + *preset + "'");
    }
    c.preset = *preset;
    if (auto v = r.integer("experiment", "elements")) {
        if (*v < 2 || *v > 512) {
            r.fail("experiment", "elements", "must lie in [2, 512]");
        }
        c.options.elements = static_cast<int>(*v);
    }
    if (auto v = r.number("experiment", "horizon")) {
        if (!(*v > 0.0) || !std::isfinite(*v)) {
            r.fail("experiment", "horizon", "must be positive and finite");
        }
        c.options.horizon = *v;
    }
    if (auto v = r.text("experiment", "metric")) {
        if (*v != "lumped" && *v != "consistent") {
            r.fail("experiment", "metric", "must be lumped or consistent");
        }
        c.options.metric = *v;
    }
    if (auto v = r.text("experiment", "initial")) {
        c.options.initial = *v;
    }
    if (auto v = r.text("experiment", "omega"); v && *v != "auto") {
        const double w = *r.number("experiment", "omega");
        if (w < 0.0) {
            r.fail("experiment", "omega", "must be non-negative or auto");
        }
        c.omega = w;
    }

    if (auto v = r.text("load", "name")) {
        c.options.load = *v;
    }
    if (auto v = r.number("load", "amplitude")) {
        if (!std::isfinite(*v)) {
            r.fail("load", "amplitude", "must be finite");
        }
        c.options.amplitude = *v;
    }

    if (auto counts = r.integer_list("ladder", "slab_counts"); !counts.empty()) {
        c.slab_counts = counts;
    }
    for (std::size_t i = 1; i < c.slab_counts.size(); ++i) {
        if (c.slab_counts[i] <= c.slab_counts[i - 1] || c.slab_counts[i] % c.slab_counts[i - 1] != 0) {
            r.fail("ladder", "slab_counts", "must be strictly increasing with each entry dividing the next");
        }
    }
    if (auto v = r.integer("ladder", "oracle_steps")) {
        if (*v < 0 || *v > 10'000'000) {
            r.fail("ladder", "oracle_steps", "must lie in [0, 1e7]");
        }
        c.oracle_steps = static_cast<int>(*v);
    }
    if (auto v = r.integer("ladder", "output_points")) {
        if (*v < 0 || *v > 1'000'000) {
            r.fail("ladder", "output_points", "must lie in [0, 1e6]");
        }
        c.output_points = static_cast<int>(*v);
    }

    if (auto v = r.text("invariance", "set")) {
        if (*v != "box" && *v != "halfspace" && *v != "ball" && *v != "whole") {
            r.fail("invariance", "set", "must be box, halfspace, ball or whole");
        }
        c.invariance.set = *v;
    }
    if (auto v = r.number("invariance", "lower")) {
        c.invariance.lower = *v;
    }
    if (auto v = r.number("invariance", "upper")) {
        c.invariance.upper = *v;
    }
    if (c.invariance.lower > c.invariance.upper) {
        r.fail("invariance", "lower", "exceeds upper");
    }
    if (auto v = r.number("invariance", "radius")) {
        if (*v < 0.0 || !std::isfinite(*v)) {
            r.fail("invariance", "radius", "must be finite and non-negative");
        }
        c.invariance.radius = *v;
    }
    if (auto v = r.number("invariance", "offset")) {
        c.invariance.offset = *v;
    }
    if (auto v = r.integer("invariance", "samples")) {
        if (*v < 1 || *v > 10'000'000) {
            r.fail("invariance", "samples", "must lie in [1, 1e7]");
        }
        c.invariance.samples = static_cast<int>(*v);
    }
    if (auto v = r.integer("invariance", "time_samples")) {
        if (*v < 2 || *v > 100'000) {
            r.fail("invariance", "time_samples", "must lie in [2, 1e5]");
        }
        c.invariance.time_samples = static_cast<int>(*v);
    }

    if (auto v = r.text("output", "dir")) {
        c.out_dir = *v;
    }
    if (auto v = r.integer("output", "seed")) {
        if (*v < 0) {
            r.fail("output", "seed", "must be non-negative");
        }
        c.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto v = r.integer("output", "threads")) {
        if (*v < 1 || *v > 256) {
            r.fail("output", "threads", "must lie in [1, 256]");
        }
        c.threads = static_cast<int>(*v);
    }

    // Preset options are validated by building the problem once.
    (void)make_problem(c.preset, c.options);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::config, "cannot read config file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag, const ExperimentConfig& config)
{
    if (flag && !flag->empty()) {
        return *flag;
    }
    if (config.out_dir) {
        return *config.out_dir;
    }
    if (const char* env = std::getenv("EVOLVEQ_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "evolveq-out";
}

}  // namespace evolveq
