#include "flock/io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "flock/error.hpp"

namespace flock::io {

namespace fs = std::filesystem;

std::string format_double(double v)
{
    return fmt::format("{:.17g}", v);
}

namespace {

template <class T>
T field(const json& j, const char* name)
{
    if (!j.contains(name))
        throw InvalidArgument(fmt::format("missing field '{}'", name));
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument(fmt::format("field '{}' has the wrong type", name));
    }
}

double parse_double(const std::string& s)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw InvalidArgument(fmt::format("not a number: '{}'", s));
    return v;
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep))
        out.push_back(cell);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!line.empty())
            out.push_back(line);
    }
    return out;
}

std::string state_header(int dim)
{
    std::string h = "m";
    for (int k = 0; k < dim; ++k)
        h += fmt::format(",x{}", k);
    for (int k = 0; k < dim; ++k)
        h += fmt::format(",v{}", k);
    return h;
}

std::string state_row(const Ensemble& e, std::size_t i)
{
    std::string row = format_double(e.masses[i]);
    for (double c : e.x(i))
        row += "," + format_double(c);
    for (double c : e.v(i))
        row += "," + format_double(c);
    return row;
}

// Appends one particle parsed from cells[first..first+2d].
void append_state(Ensemble& e, const std::vector<std::string>& cells, std::size_t first)
{
    e.masses.push_back(parse_double(cells[first]));
    for (int k = 0; k < e.dim; ++k)
        e.positions.push_back(parse_double(cells[first + 1 + k]));
    for (int k = 0; k < e.dim; ++k)
        e.velocities.push_back(parse_double(cells[first + 1 + e.dim + k]));
}

int dim_from_header(const std::string& header, std::size_t leading)
{
    const auto cells = split(header, ',');
    const std::size_t state = cells.size() - leading;
    if (cells.size() < leading + 3 || (state - 1) % 2 != 0)
        throw InvalidArgument(fmt::format("malformed CSV header '{}'", header));
    return int((state - 1) / 2);
}

} // namespace

json to_json(const Ensemble& e)
{
    return {{"dim", e.dim},
            {"masses", e.masses},
            {"positions", e.positions},
            {"velocities", e.velocities},
            {"time", e.time}};
}

Ensemble ensemble_from_json(const json& j)
{
    Ensemble e;
    e.dim = field<int>(j, "dim");
    e.masses = field<std::vector<double>>(j, "masses");
    e.positions = field<std::vector<double>>(j, "positions");
    e.velocities = field<std::vector<double>>(j, "velocities");
    e.time = j.contains("time") ? field<double>(j, "time") : 0.0;
    if (e.dim < 1 || e.positions.size() != e.masses.size() * e.dim ||
        e.velocities.size() != e.masses.size() * e.dim)
        throw InvalidArgument("ensemble arrays do not match dim and the number of masses");
    return e;
}

json to_json(const AtomicMeasure& mu)
{
    json points = json::array();
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const auto p = mu.point(k);
        points.push_back(std::vector<double>(p.begin(), p.end()));
    }
    return {{"dim", mu.dim}, {"points", points}, {"weights", mu.weights}};
}

AtomicMeasure measure_from_json(const json& j)
{
    AtomicMeasure mu;
    mu.dim = field<int>(j, "dim");
    const auto points = field<std::vector<std::vector<double>>>(j, "points");
    mu.weights = field<std::vector<double>>(j, "weights");
    if (points.size() != mu.weights.size())
        throw InvalidArgument("measure has different numbers of points and weights");
    for (const auto& p : points) {
        if (p.size() != std::size_t(mu.dim))
            throw InvalidArgument(fmt::format("measure point has {} coordinates, expected {}", p.size(), mu.dim));
        mu.points.insert(mu.points.end(), p.begin(), p.end());
    }
    validate(mu);
    return mu;
}

json to_json(const WeightSpec& w)
{
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, SingularWeight>)
                return {{"kind", "singular"}, {"alpha", v.alpha}};
            else if constexpr (std::is_same_v<T, CappedWeight>)
                return {{"kind", "capped"}, {"alpha", v.alpha}, {"cap", v.cap}};
            else
                return {{"kind", "regular"}, {"amplitude", v.amplitude}, {"beta", v.beta}};
        },
        w.variant());
}

WeightSpec weight_from_json(const json& j)
{
    const auto kind = field<std::string>(j, "kind");
    if (kind == "singular")
        return WeightSpec::singular(field<double>(j, "alpha"));
    if (kind == "capped")
        return WeightSpec::capped(field<double>(j, "alpha"), field<double>(j, "cap"));
    if (kind == "regular")
        return WeightSpec::regular(field<double>(j, "amplitude"), field<double>(j, "beta"));
    throw InvalidArgument(fmt::format("unknown weight kind '{}'", kind));
}

json to_json(const SimOptions& opts)
{
    return {{"weight", to_json(opts.weight)},
            {"t_end", opts.t_end},
            {"rel_tol", opts.rel_tol},
            {"abs_tol", opts.abs_tol},
            {"stick_dx", opts.stick_dx},
            {"stick_dv", opts.stick_dv},
            {"max_dt", opts.max_dt},
            {"output_stride", opts.output_stride},
            {"seed", opts.seed}};
}

SimOptions options_from_json(const json& j)
{
    SimOptions o;
    o.weight = weight_from_json(field<json>(j, "weight"));
    o.t_end = field<double>(j, "t_end");
    o.rel_tol = field<double>(j, "rel_tol");
    o.abs_tol = field<double>(j, "abs_tol");
    o.stick_dx = field<double>(j, "stick_dx");
    o.stick_dv = field<double>(j, "stick_dv");
    o.max_dt = field<double>(j, "max_dt");
    o.output_stride = field<double>(j, "output_stride");
    o.seed = field<std::uint64_t>(j, "seed");
    o.validate();
    return o;
}

json to_json(const DiagnosticsReport& r)
{
    return {{"mass_drift", r.mass_drift},       {"momentum_drift", r.momentum_drift},
            {"support_max", r.support_max},     {"support_bound", r.support_bound},
            {"dissipation_p", r.dissipation_p}, {"coupling_p", r.coupling_p},
            {"coupling_pp", r.coupling_pp},     {"modulus_lp", r.modulus_lp},
            {"p_used", r.p_used}};
}

std::string ensemble_csv(const Ensemble& e)
{
    std::string out = "i," + state_header(e.dim) + "\n";
    for (std::size_t i = 0; i < e.size(); ++i)
        out += fmt::format("{},{}\n", i, state_row(e, i));
    return out;
}

Ensemble ensemble_from_csv(const std::string& text, double time)
{
    const auto lines = lines_of(text);
    if (lines.empty())
        throw InvalidArgument("empty ensemble CSV");
    Ensemble e;
    e.dim = dim_from_header(lines[0], 1);
    e.time = time;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        if (cells.size() != std::size_t(2 + 2 * e.dim))
            throw InvalidArgument(fmt::format("ensemble CSV line {} has {} cells", r + 1, cells.size()));
        append_state(e, cells, 1);
    }
    return e;
}

void write_trajectory(const fs::path& dir, const Trajectory& traj)
{
    fs::create_directories(dir);
    const int dim = traj.snapshots.empty() ? 1 : traj.snapshots.front().dim;

    std::string snaps = "t,i," + state_header(dim) + "\n";
    for (const auto& s : traj.snapshots)
        for (std::size_t i = 0; i < s.size(); ++i)
            snaps += fmt::format("{},{},{}\n", format_double(s.time), i, state_row(s, i));
    write_text_file(dir / "snapshots.csv", snaps);

    std::string events = "t,indices,mass_after\n";
    json jevents = json::array();
    for (const auto& ev : traj.events) {
        for (const auto& c : ev.clusters) {
            std::string idx;
            double mass = 0.0;
            for (std::size_t i : c) {
                idx += (idx.empty() ? "" : " ") + std::to_string(i);
                mass += ev.before.masses[i];
            }
            events += fmt::format("{},{},{}\n", format_double(ev.time), idx, format_double(mass));
        }
        jevents.push_back({{"time", ev.time},
                           {"clusters", ev.clusters},
                           {"before", to_json(ev.before)},
                           {"after", to_json(ev.after)}});
    }
    write_text_file(dir / "events.csv", events);

    const json meta = {{"dim", dim},
                       {"snapshot_count", traj.snapshots.size()},
                       {"options", to_json(traj.options)},
                       {"events", jevents}};
    write_text_file(dir / "trajectory.json", meta.dump(2) + "\n");
}

Trajectory read_trajectory(const fs::path& dir)
{
    const json meta = read_json_file(dir / "trajectory.json");
    Trajectory traj;
    traj.options = options_from_json(field<json>(meta, "options"));
    for (const auto& jev : field<json>(meta, "events")) {
        MergeEvent ev;
        ev.time = field<double>(jev, "time");
        ev.clusters = field<std::vector<Cluster>>(jev, "clusters");
        ev.before = ensemble_from_json(field<json>(jev, "before"));
        ev.after = ensemble_from_json(field<json>(jev, "after"));
        traj.events.push_back(std::move(ev));
    }

    const auto lines = lines_of(read_text_file(dir / "snapshots.csv"));
    if (lines.empty())
        throw InvalidArgument("empty snapshot CSV");
    const int dim = dim_from_header(lines[0], 2);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        if (cells.size() != std::size_t(3 + 2 * dim))
            throw InvalidArgument(fmt::format("snapshot CSV line {} has {} cells", r + 1, cells.size()));
        const double t = parse_double(cells[0]);
        const auto i = std::stoul(cells[1]);
        if (i == 0) {
            traj.snapshots.emplace_back();
            traj.snapshots.back().dim = dim;
            traj.snapshots.back().time = t;
        } else if (traj.snapshots.empty() || traj.snapshots.back().size() != i) {
            throw InvalidArgument(fmt::format("snapshot CSV line {} is out of order", r + 1));
        }
        append_state(traj.snapshots.back(), cells, 2);
    }
    const auto expected = field<std::size_t>(meta, "snapshot_count");
    if (traj.snapshots.size() != expected)
        throw InvalidArgument(fmt::format("snapshot CSV holds {} snapshots, metadata says {}",
                                          traj.snapshots.size(), expected));
    return traj;
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows)
{
    std::string out = "h,N,D\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{}\n", format_double(r.h), r.particles, format_double(r.distance));
    return out;
}

std::string cap_csv(const std::vector<CapComparison>& rows)
{
    std::string out = "cap_a,cap_b,deviation,window_end\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{}\n", format_double(r.cap_a), format_double(r.cap_b),
                           format_double(r.deviation), format_double(r.window_end));
    return out;
}

std::string read_text_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidArgument(fmt::format("cannot read '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InvalidArgument(fmt::format("cannot write '{}'", path.string()));
    out << text;
    if (!out)
        throw InvalidArgument(fmt::format("write to '{}' failed", path.string()));
}

json read_json_file(const fs::path& path)
{
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& ex) {
        throw InvalidArgument(fmt::format("{}: {}", path.string(), ex.what()));
    }
}

AtomicMeasure read_measure_file(const fs::path& path)
{
    const json j = read_json_file(path);
    try {
        if (j.contains("masses")) {
            const Ensemble e = ensemble_from_json(j);
            validate(e, false);
            return empirical_measure(e);
        }
        return measure_from_json(j);
    } catch (const InvalidArgument& ex) {
        throw InvalidArgument(fmt::format("{}: {}", path.string(), ex.what()));
    }
}

} // namespace flock::io
