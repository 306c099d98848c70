#include "flock/config.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "flock/fixtures.hpp"
#include "flock/io.hpp"

namespace flock {

namespace {

using json = nlohmann::json;

const std::set<std::string> kKnownFields{
    "kind",     "weight",        "alpha",       "cap",       "amplitude",   "beta",    "t_end",
    "rel_tol",  "abs_tol",       "stick_dx",    "stick_dv",  "max_dt",      "output_stride",
    "seed",     "fixture",       "masses",      "positions", "velocities",  "dim",     "time",
    "ensemble_file", "samples_file", "density", "box_lo",    "box_hi",      "h",       "output_dir",
    "R0",       "p",             "observable_coordinate",    "h_list",      "sample_times", "caps",
    "n",        "radius"};

const std::set<std::string> kFixtures{"flocking_pair",        "sticking_pair",       "colocated_pair",
                                      "equal_velocity_cloud", "three_body_sticking", "random_cloud",
                                      "uniform_box"};

class Reader {
public:
    Reader(const std::string& text, std::string origin, json j)
        : text_(text), origin_(std::move(origin)), j_(std::move(j))
    {
    }

    bool has(const char* name) const { return j_.contains(name); }

    [[noreturn]] void fail(const std::string& name, const std::string& reason) const
    {
        throw ConfigError(fmt::format("{}:{}: field '{}': {}", origin_, line_of(name), name, reason));
    }

    double number(const char* name) const
    {
        const auto& v = j_.at(name);
        if (!v.is_number())
            fail(name, "expected a number");
        return v.get<double>();
    }

    double positive(const char* name) const
    {
        const double v = number(name);
        if (!(v > 0.0))
            fail(name, "must be positive");
        return v;
    }

    std::uint64_t unsigned_integer(const char* name) const
    {
        const auto& v = j_.at(name);
        if (!v.is_number_unsigned())
            fail(name, "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    std::string string(const char* name) const
    {
        const auto& v = j_.at(name);
        if (!v.is_string())
            fail(name, "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const char* name) const
    {
        const auto& v = j_.at(name);
        if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }))
            fail(name, "expected an array of numbers");
        return v.get<std::vector<double>>();
    }

    // Line of the first occurrence of the quoted key, 0 when it does not appear.
    std::size_t line_of(const std::string& name) const
    {
        const auto pos = text_.find("\"" + name + "\"");
        if (pos == std::string::npos)
            return 0;
        return 1 + std::size_t(std::count(text_.begin(), text_.begin() + pos, '\n'));
    }

private:
    const std::string& text_;
    std::string origin_;
    json j_;
};

WeightSpec read_weight(const Reader& r)
{
    const std::string kind = r.has("weight") ? r.string("weight") : "singular";
    try {
        if (kind == "singular")
            return WeightSpec::singular(r.has("alpha") ? r.number("alpha") : fixtures::kAlpha);
        if (kind == "capped") {
            if (!r.has("cap"))
                r.fail("cap", "required for the capped weight");
            return WeightSpec::capped(r.has("alpha") ? r.number("alpha") : fixtures::kAlpha, r.number("cap"));
        }
        if (kind == "regular")
            return WeightSpec::regular(r.has("amplitude") ? r.number("amplitude") : 1.0,
                                       r.has("beta") ? r.number("beta") : 1.0);
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& ex) {
        r.fail("weight", ex.what());
    }
    r.fail("weight", fmt::format("unknown weight '{}' (singular, capped or regular)", kind));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

} // namespace

RunConfig parse_config(const std::string& text, const std::string& origin, const std::filesystem::path& base_dir)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& ex) {
        throw ConfigError(fmt::format("{}: {}", origin, ex.what()));
    }
    if (!j.is_object())
        throw ConfigError(fmt::format("{}:1: configuration must be a JSON object", origin));
    const Reader r(text, origin, j);
    for (const auto& [key, value] : j.items())
        if (!kKnownFields.count(key))
            r.fail(key, "unknown field");

    RunConfig cfg;
    if (r.has("kind")) {
        cfg.kind = r.string("kind");
        if (cfg.kind != "simulate" && cfg.kind != "converge")
            r.fail("kind", "expected \"simulate\" or \"converge\"");
    }

    SimOptions& o = cfg.options;
    o.weight = read_weight(r);
    if (r.has("t_end"))
        o.t_end = r.positive("t_end");
    if (r.has("rel_tol"))
        o.rel_tol = r.positive("rel_tol");
    if (r.has("abs_tol"))
        o.abs_tol = r.positive("abs_tol");
    if (r.has("stick_dx"))
        o.stick_dx = r.number("stick_dx");
    if (r.has("stick_dv"))
        o.stick_dv = r.number("stick_dv");
    if (r.has("max_dt"))
        o.max_dt = r.positive("max_dt");
    if (r.has("output_stride"))
        o.output_stride = r.positive("output_stride");
    if (r.has("seed"))
        o.seed = r.unsigned_integer("seed");
    try {
        o.validate();
    } catch (const InvalidArgument& ex) {
        throw ConfigError(fmt::format("{}: {}", origin, ex.what()));
    }

    std::vector<std::string> sources;
    for (const char* key : {"fixture", "masses", "ensemble_file", "samples_file", "density"})
        if (r.has(key))
            sources.push_back(key);
    if (sources.empty())
        throw ConfigError(fmt::format(
            "{}: no initial datum (set one of fixture, masses, ensemble_file, samples_file, density)", origin));
    if (sources.size() > 1)
        r.fail(sources[1], fmt::format("conflicts with '{}': exactly one initial datum is allowed", sources[0]));

    if (r.has("fixture")) {
        cfg.fixture = r.string("fixture");
        if (!kFixtures.count(cfg.fixture))
            r.fail("fixture", fmt::format("unknown fixture '{}'", cfg.fixture));
    }
    if (!r.has("masses") && (r.has("positions") || r.has("velocities")))
        r.fail("masses", "required for an inline atom list");
    if (r.has("masses")) {
        for (const char* f : {"masses", "positions", "velocities"})
            if (!r.has(f))
                r.fail(f, "required for an inline atom list");
        Ensemble e;
        e.dim = r.has("dim") ? int(r.unsigned_integer("dim")) : 1;
        e.masses = r.numbers("masses");
        e.positions = r.numbers("positions");
        e.velocities = r.numbers("velocities");
        e.time = r.has("time") ? r.number("time") : 0.0;
        try {
            validate(e);
        } catch (const InvalidArgument& ex) {
            r.fail("masses", ex.what());
        }
        cfg.atoms = std::move(e);
    }
    if (r.has("ensemble_file")) {
        const auto path = resolve(base_dir, r.string("ensemble_file"));
        try {
            Ensemble e = io::ensemble_from_json(io::read_json_file(path));
            validate(e);
            cfg.atoms = std::move(e);
        } catch (const InvalidArgument& ex) {
            r.fail("ensemble_file", ex.what());
        }
    }
    if (r.has("samples_file")) {
        const auto path = resolve(base_dir, r.string("samples_file"));
        try {
            const auto mu = io::measure_from_json(io::read_json_file(path));
            if (mu.dim % 2 != 0)
                throw InvalidArgument("sample points need an even number of phase-space coordinates");
            cfg.samples = WeightedSamples{mu.dim / 2, mu.points, mu.weights};
        } catch (const InvalidArgument& ex) {
            r.fail("samples_file", ex.what());
        }
    }
    if (r.has("density")) {
        if (r.string("density") != "uniform")
            r.fail("density", "only \"uniform\" is supported");
        if (!r.has("box_lo") || !r.has("box_hi"))
            r.fail("density", "needs box_lo and box_hi");
        DensityBox box;
        box.lo = r.numbers("box_lo");
        box.hi = r.numbers("box_hi");
        if (box.lo.empty() || box.lo.size() % 2 != 0 || box.lo.size() != box.hi.size())
            r.fail("box_lo", "box corners need the same even number of coordinates");
        for (std::size_t k = 0; k < box.lo.size(); ++k)
            if (!(box.lo[k] <= box.hi[k]))
                r.fail("box_hi", "every upper corner coordinate must be >= the lower one");
        box.dim = int(box.lo.size() / 2);
        box.density = [](std::span<const double>) { return 1.0; };
        cfg.density = std::move(box);
    }
    if (r.has("h"))
        cfg.h = r.positive("h");
    if (r.has("output_dir"))
        cfg.output_dir = resolve(base_dir, r.string("output_dir"));
    if (r.has("R0"))
        cfg.R0 = r.positive("R0");
    if (r.has("p")) {
        cfg.p = r.number("p");
        if (!(cfg.p > 1.0))
            r.fail("p", "must exceed 1");
    }
    if (r.has("observable_coordinate"))
        cfg.observable_coordinate = int(r.unsigned_integer("observable_coordinate"));
    if (r.has("h_list"))
        cfg.h_list = r.numbers("h_list");
    if (r.has("sample_times"))
        cfg.sample_times = r.numbers("sample_times");
    if (r.has("caps"))
        cfg.caps = r.numbers("caps");
    if (r.has("n"))
        cfg.n = r.unsigned_integer("n");
    if (r.has("dim") && !cfg.atoms)
        cfg.dim = int(r.unsigned_integer("dim"));
    if (r.has("radius"))
        cfg.radius = r.positive("radius");
    if (cfg.fixture == "random_cloud" && (cfg.n < 1 || cfg.dim < 1))
        r.fail("n", "random_cloud needs n >= 1 and dim >= 1");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    return parse_config(io::read_text_file(path), path.string(), path.parent_path());
}

Ensemble initial_ensemble(const RunConfig& cfg)
{
    if (cfg.atoms)
        return *cfg.atoms;
    if (cfg.fixture == "flocking_pair")
        return fixtures::flocking_pair();
    if (cfg.fixture == "sticking_pair")
        return fixtures::sticking_pair();
    if (cfg.fixture == "colocated_pair")
        return fixtures::colocated_pair();
    if (cfg.fixture == "equal_velocity_cloud")
        return fixtures::equal_velocity_cloud();
    if (cfg.fixture == "three_body_sticking")
        return fixtures::three_body_sticking(cfg.options);
    if (cfg.fixture == "random_cloud")
        return fixtures::random_cloud(cfg.options.seed, cfg.n, cfg.dim, cfg.radius);
    if (!cfg.h)
        throw ConfigError("field 'h': required to quantize a density or sample source");
    return quantize(initial_datum(cfg), *cfg.h);
}

InitialDatum initial_datum(const RunConfig& cfg)
{
    if (cfg.density)
        return *cfg.density;
    if (cfg.samples)
        return *cfg.samples;
    if (cfg.fixture == "uniform_box")
        return fixtures::uniform_box();
    const Ensemble e = initial_ensemble(cfg);
    WeightedSamples s;
    s.dim = e.dim;
    s.weights = e.masses;
    for (std::size_t i = 0; i < e.size(); ++i) {
        s.points.insert(s.points.end(), e.x(i).begin(), e.x(i).end());
        s.points.insert(s.points.end(), e.v(i).begin(), e.v(i).end());
    }
    return s;
}

} // namespace flock
