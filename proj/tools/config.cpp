#include "config.hpp"

#include "planesel/core.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace planesel::cli {

namespace {

using Schema = std::map<std::string, Value>;

const Schema& schema()
{
    static const Schema s = {
        {"run.scenario", std::string("default")},
        {"run.out_dir", std::string("out")},
        {"run.seed", 1.0},
        {"run.samples", 1000.0},
        {"run.threads", 1.0},

        {"trap.trap_frequency_Hz", 28.0e3},
        {"trap.lamb_dicke", 0.4},
        {"trap.mean_phonon", 0.59},
        {"trap.fock_cutoff", 10.0},
        {"trap.depth_uK", 50.0},

        {"field.bias_G", 0.9},
        {"field.gradient_G_per_cm", 20.5},
        {"field.offset_x_um", 0.0},
        {"field.offset_y_um", 0.0},
        {"field.offset_z_um", -1200.0},
        {"field.zeeman_per_mF_Hz_per_G", 2.5e6},
        {"field.mF", 1.5},

        {"array.nx", 4.0},
        {"array.ny", 4.0},
        {"array.planes", 3.0},
        {"array.dxy_um", 10.0},
        {"array.dz_um", 30.0},

        {"spectrum.linewidth_rate_per_s", 7600.0},
        {"spectrum.rabi_Hz", 10.0e3},
        {"spectrum.noise_fwhm_Hz", -1.0},
        {"spectrum.grid_half_span_Hz", 500.0e3},
        {"spectrum.grid_pitch_Hz", 100.0},
        {"spectrum.sideband_height", -1.0},

        {"budget.rabi_Hz", 10.0e3},
        {"budget.power_carrier_Hz", 13.1e3},
        {"budget.power_sideband_Hz", 4.7e3},
        {"budget.magnetic_inhomogeneity_Hz", 0.3e3},
        {"budget.coil_ripple_Hz", 51.4e3},
        {"budget.stray_field_Hz", 2.5e3},
        {"budget.depth_inhomogeneity_Hz", 0.2e3},
        {"budget.depth_fluctuation_Hz", 0.3e3},
        {"budget.source_model", std::string("dressed")},
        {"budget.ionization_beta_Hz_per_mK2", 21.5},

        {"crosstalk.bias_G", 500.0},
        {"crosstalk.gradient_G_per_cm", 300.0},
        {"crosstalk.rabi_Hz", 1.0e3},
        {"crosstalk.spontaneous_Hz", 14.6e-3},
        {"crosstalk.mean_phonon", 0.2},
        {"crosstalk.planes", 11.0},
        {"crosstalk.dxy_um", 4.0},
        {"crosstalk.sizes", std::vector<double>{4.0, 40.0}},
        {"crosstalk.noise_G", std::vector<double>{1.0e-4, 1.0e-3}},
        {"crosstalk.dz_um",
         std::vector<double>{1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0}},
        {"crosstalk.reference_dz_um", 3.0},
        {"crosstalk.threshold", 1.0e-3},
        {"crosstalk.crossing_min_um", 0.5},
        {"crosstalk.crossing_max_um", 5.0},
        {"crosstalk.method", std::string("steady_state")},

        {"hologram.width", 1024.0},
        {"hologram.height", 1024.0},
        {"hologram.pitch_um", 12.5},
        {"hologram.magnification", 5.0 / 3.0},
        {"hologram.focal_length_mm", 20.0},
        {"hologram.wavelength_nm", 532.0},
        {"hologram.nx", 4.0},
        {"hologram.ny", 4.0},
        {"hologram.planes", 3.0},
        {"hologram.dxy_um", 10.0},
        {"hologram.dz_um", 30.0},
        {"hologram.iterations", 5.0},
        {"hologram.gamma", 0.5},
        {"hologram.tolerance_um", 1.0},
        {"hologram.write_csv", false},

        {"fit.model", std::string("shelved_rabi")},
        {"fit.survival", 0.744},
        {"fit.repump", 0.982},
    };
    return s;
}

const char* type_name(const Value& v)
{
    switch (v.index()) {
    case 0:
        return "number";
    case 1:
        return "boolean";
    case 2:
        return "string";
    default:
        return "array";
    }
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line)
{
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"')
            in_string = !in_string;
        else if (line[i] == '#' && !in_string)
            return line.substr(0, i);
    }
    return line;
}

bool parse_number(const std::string& s, double& out)
{
    std::string t;
    for (char c : s)
        if (c != '_')
            t += c;
    if (!t.empty() && t[0] == '+')
        t.erase(0, 1);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    return res.ec == std::errc() && res.ptr == t.data() + t.size() && !t.empty();
}

Value parse_value(const std::string& raw, const std::string& where)
{
    const std::string s = trim(raw);
    if (s == "true")
        return true;
    if (s == "false")
        return false;
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        return s.substr(1, s.size() - 2);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']') {
        std::vector<double> items;
        const std::string body = s.substr(1, s.size() - 2);
        std::size_t start = 0;
        while (start <= body.size()) {
            const auto comma = body.find(',', start);
            const std::string item = trim(body.substr(start, comma - start));
            if (!item.empty()) {
                double v = 0.0;
                if (!parse_number(item, v))
                    throw ConfigError(where + ": array item '" + item + "' is not a number");
                items.push_back(v);
            }
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        return items;
    }
    double v = 0.0;
    if (!parse_number(s, v))
        throw ConfigError(where + ": cannot parse value '" + s + "'");
    return v;
}

std::string format_value(const Value& v)
{
    char buf[40];
    switch (v.index()) {
    case 0:
        std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(v));
        return buf;
    case 1:
        return std::get<bool>(v) ? "true" : "false";
    case 2:
        return "\"" + std::get<std::string>(v) + "\"";
    default: {
        std::string out = "[";
        const auto& items = std::get<std::vector<double>>(v);
        for (std::size_t i = 0; i < items.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", items[i]);
            out += (i ? ", " : "") + std::string(buf);
        }
        return out + "]";
    }
    }
}

}  // namespace

RunConfig::RunConfig() : values_(schema()) {}

RunConfig RunConfig::parse(std::istream& is, const std::string& source)
{
    RunConfig cfg;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string where = source + ":" + std::to_string(lineno);
        const std::string s = trim(strip_comment(line));
        if (s.empty())
            continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError(where + ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string path = section.empty() ? key : section + "." + key;
        if (!schema().count(path))
            throw ConfigError(where + ": unknown key '" + path + "'");
        Value v = parse_value(s.substr(eq + 1), where + " (" + path + ")");
        cfg.set(path, std::move(v));
    }
    return cfg;
}

void RunConfig::set(const std::string& key, Value v)
{
    const auto it = schema().find(key);
    if (it == schema().end())
        throw ConfigError("unknown key '" + key + "'");
    if (v.index() != it->second.index())
        throw ConfigError("key '" + key + "' expects a " + type_name(it->second) + ", got a " +
                          type_name(v));
    values_[key] = std::move(v);
}

const Value& RunConfig::get(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("unknown key '" + key + "'");
    return it->second;
}

double RunConfig::number(const std::string& key) const
{
    return std::get<double>(get(key));
}

int RunConfig::integer(const std::string& key) const
{
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 2.0e9)
        throw ConfigError("key '" + key + "' must be an integer");
    return static_cast<int>(v);
}

bool RunConfig::boolean(const std::string& key) const
{
    return std::get<bool>(get(key));
}

const std::string& RunConfig::text(const std::string& key) const
{
    return std::get<std::string>(get(key));
}

const std::vector<double>& RunConfig::list(const std::string& key) const
{
    return std::get<std::vector<double>>(get(key));
}

void RunConfig::write(std::ostream& os) const
{
    std::string section;
    for (const auto& [path, value] : values_) {
        const auto dot = path.find('.');
        const std::string sec = path.substr(0, dot);
        if (sec != section) {
            os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
            section = sec;
        }
        os << path.substr(dot + 1) << " = " << format_value(value) << '\n';
    }
}

}  // namespace planesel::cli
