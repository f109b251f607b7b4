#include "b92sim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "b92sim/errors.hpp"

namespace b92 {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("line " + std::to_string(line) + ": " + what);
}

std::string strip_comment(std::string_view line) {
    std::string out;
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (c == '#' && !in_string) break;
        out.push_back(c);
    }
    return out;
}

bool parse_number(std::string_view text, double& out) {
    std::string cleaned;
    for (char c : text)
        if (c != '_') cleaned.push_back(c);
    std::string_view v = cleaned;
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    if (v == "inf" || v == "nan") return false;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    return res.ec == std::errc() && res.ptr == v.data() + v.size();
}

std::string parse_string(std::string_view text, int line) {
    if (text.size() < 2 || text.front() != '"' || text.back() != '"') fail(line, "malformed string " + std::string(text));
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        if (text[i] == '\\' && i + 2 < text.size()) ++i;
        out.push_back(text[i]);
    }
    return out;
}

std::vector<std::string_view> split_array(std::string_view body) {
    std::vector<std::string_view> items;
    bool in_string = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i < body.size() && body[i] == '"') in_string = !in_string;
        if (i == body.size() || (body[i] == ',' && !in_string)) {
            const auto item = trim(body.substr(start, i - start));
            if (!item.empty()) items.push_back(item);
            start = i + 1;
        }
    }
    return items;
}

ConfigValue parse_value(std::string_view text, int line) {
    ConfigValue v;
    v.raw = std::string(text);
    v.line = line;
    if (text.empty()) fail(line, "missing value");
    if (text.front() == '"') {
        v.value = parse_string(text, line);
    } else if (text == "true" || text == "false") {
        v.value = text == "true";
    } else if (text.front() == '[') {
        if (text.back() != ']') fail(line, "unterminated array");
        const auto items = split_array(text.substr(1, text.size() - 2));
        if (!items.empty() && items.front().front() == '"') {
            std::vector<std::string> strings;
            for (auto item : items) strings.push_back(parse_string(item, line));
            v.value = std::move(strings);
        } else {
            std::vector<double> numbers;
            for (auto item : items) {
                double d = 0.0;
                if (!parse_number(item, d)) fail(line, "bad number in array: " + std::string(item));
                numbers.push_back(d);
            }
            v.value = std::move(numbers);
        }
    } else {
        double d = 0.0;
        if (!parse_number(text, d)) fail(line, "cannot parse value " + std::string(text));
        v.value = d;
    }
    return v;
}

bool valid_key(std::string_view k) {
    if (k.empty()) return false;
    return std::all_of(k.begin(), k.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

// Keys of the fixed sections, used to resolve bare top-level keys.
const std::vector<std::string>& fixed_keys() {
    static const std::vector<std::string> keys = {
        "meta.name",
        "source.clock_hz", "source.mean_photon_number", "source.wavelength_nm",
        "source.sync_wavelength_nm", "source.base_pulse_fwhm_ps", "source.emitter_bandwidth_hz",
        "source.single_photon",
        "channel.length_km", "channel.atten_db_per_km", "channel.broadening_ps_per_km",
        "channel.mode", "channel.excess_loss_db",
        "detector.profile", "detector.efficiency", "detector.dark_cps", "detector.dead_time_ns",
        "gate.gate_fraction", "gate.window_offset_ps",
        "sync.sync_fwhm_ps",
        "security.qber_secure_threshold", "security.ec_inefficiency_f",
        "run.n_slots", "run.seed", "run.workers",
    };
    return keys;
}

void resolve_bare_keys(ConfigTable& table) {
    std::vector<std::string> bare;
    for (const auto& [k, v] : table)
        if (k.find('.') == std::string::npos) bare.push_back(k);
    for (const auto& k : bare) {
        std::string match;
        int count = 0;
        for (const auto& full : fixed_keys()) {
            if (full.substr(full.find('.') + 1) == k) {
                match = full;
                ++count;
            }
        }
        if (count != 1) continue;
        if (table.count(match)) throw ConfigError("key " + k + " given both bare and as " + match);
        auto node = table.extract(k);
        node.key() = match;
        table.insert(std::move(node));
    }
}

class Reader {
public:
    explicit Reader(ConfigTable& table) : table_(table) {}

    void number(const std::string& key, double& out) {
        if (auto v = take(key)) {
            if (auto d = std::get_if<double>(&v->value))
                out = *d;
            else
                throw ConfigError(key + ": expected a number");
        }
    }

    void string(const std::string& key, std::string& out) {
        if (auto v = take(key)) {
            if (auto s = std::get_if<std::string>(&v->value))
                out = *s;
            else
                throw ConfigError(key + ": expected a quoted string");
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (auto v = take(key)) {
            if (auto a = std::get_if<std::vector<double>>(&v->value))
                out = *a;
            else
                throw ConfigError(key + ": expected an array of numbers");
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (auto v = take(key)) {
            if (auto b = std::get_if<bool>(&v->value))
                out = *b;
            else
                throw ConfigError(key + ": expected true or false");
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (auto v = take(key)) {
            if (!std::holds_alternative<double>(v->value)) throw ConfigError(key + ": expected an integer");
            std::string text;
            for (char c : v->raw)
                if (c != '_') text.push_back(c);
            Int parsed{};
            const auto res = std::from_chars(text.data(), text.data() + text.size(), parsed);
            if (res.ec == std::errc() && res.ptr == text.data() + text.size()) {
                out = parsed;
                return;
            }
            // Accept exponent notation for whole numbers, e.g. 2e6.
            const double d = std::get<double>(v->value);
            if (d != std::floor(d) || d < static_cast<double>(std::numeric_limits<Int>::min()) ||
                d > 9.007199254740992e15)
                throw ConfigError(key + ": expected an integer");
            out = static_cast<Int>(d);
        }
    }

private:
    std::optional<ConfigValue> take(const std::string& key) {
        auto it = table_.find(key);
        if (it == table_.end()) return std::nullopt;
        ConfigValue v = std::move(it->second);
        table_.erase(it);
        return v;
    }

    ConfigTable& table_;
};

} // namespace

ConfigTable parse_table(std::string_view text) {
    ConfigTable table;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        ++line_no;
        const std::string stripped = strip_comment(text.substr(pos, end - pos));
        pos = end + 1;
        const auto line = trim(stripped);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!valid_key(section)) fail(line_no, "bad section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail(line_no, "bad key '" + std::string(key) + "'");
        const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
        if (table.count(full)) fail(line_no, "duplicate key " + full);
        table.emplace(full, parse_value(trim(line.substr(eq + 1)), line_no));
        if (end == text.size()) break;
    }
    return table;
}

std::map<std::string, ProfileTiming> SimConfig::builtin_profiles() {
    std::map<std::string, ProfileTiming> out;
    for (const auto& p : {DetectorProfile::standard(), DetectorProfile::enhanced()})
        out[p.name] = {p.jitter_table, p.centroid_alpha, p.tail_fraction, p.tail_tau_ps};
    return out;
}

DetectorProfile SimConfig::detector(const std::string& profile_name) const {
    const auto it = profiles.find(profile_name);
    if (it == profiles.end()) throw ConfigError("detector.profile: unknown profile \"" + profile_name + "\"");
    DetectorProfile d;
    d.name = profile_name;
    d.efficiency = efficiency;
    d.dark_cps = dark_cps;
    d.dead_time_ns = dead_time_ns;
    d.jitter_table = it->second.jitter_table;
    d.centroid_alpha = it->second.centroid_alpha;
    d.tail_fraction = it->second.tail_fraction;
    d.tail_tau_ps = it->second.tail_tau_ps;
    return d;
}

LinkConfig SimConfig::link(const std::string& profile_name) const {
    LinkConfig c;
    c.source = source;
    c.channel = channel;
    c.detector = detector(profile_name);
    c.gate = gate;
    c.sync_fwhm_ps = sync_fwhm_ps;
    c.security = security;
    return c;
}

void SimConfig::validate() const {
    if (!profiles.count(profile)) throw ConfigError("detector.profile: unknown profile \"" + profile + "\"");
    for (const auto& [n, _] : profiles) {
        try {
            link(n).validate();
        } catch (const ConfigError& e) {
            throw ConfigError("profile " + n + ": " + e.what());
        }
    }
    if (n_slots <= 0) throw ConfigError("n_slots must be > 0");
    if (workers < 1) throw ConfigError("workers must be >= 1");
}

SimConfig config_from_table(ConfigTable& table) {
    resolve_bare_keys(table);
    SimConfig c;
    Reader r(table);
    r.string("meta.name", c.name);

    r.number("source.clock_hz", c.source.clock_hz);
    r.number("source.mean_photon_number", c.source.mean_photon_number);
    r.number("source.wavelength_nm", c.source.wavelength_nm);
    r.number("source.sync_wavelength_nm", c.source.sync_wavelength_nm);
    r.number("source.base_pulse_fwhm_ps", c.source.base_pulse_fwhm_ps);
    r.number("source.emitter_bandwidth_hz", c.source.emitter_bandwidth_hz);
    r.boolean("source.single_photon", c.source.single_photon);

    r.number("channel.length_km", c.channel.length_km);
    r.number("channel.atten_db_per_km", c.channel.atten_db_per_km);
    r.number("channel.broadening_ps_per_km", c.channel.broadening_ps_per_km);
    std::string mode = to_string(c.channel.mode);
    r.string("channel.mode", mode);
    c.channel.mode = parse_channel_mode(mode.c_str());
    r.number("channel.excess_loss_db", c.channel.excess_loss_db);

    r.string("detector.profile", c.profile);
    r.number("detector.efficiency", c.efficiency);
    r.number("detector.dark_cps", c.dark_cps);
    r.number("detector.dead_time_ns", c.dead_time_ns);

    std::set<std::string> names;
    for (const auto& [k, v] : table) {
        if (k.rfind("profile.", 0) != 0) continue;
        const auto last = k.rfind('.');
        if (last <= 8) throw ConfigError(k + ": expected profile.<name>.<key>");
        names.insert(k.substr(8, last - 8));
    }
    for (const auto& n : names) {
        auto& timing = c.profiles[n];
        const std::string prefix = "profile." + n + ".";
        std::vector<double> rates, widths;
        for (const auto& p : timing.jitter_table) {
            rates.push_back(p.rate_cps);
            widths.push_back(p.fwhm_ps);
        }
        r.numbers(prefix + "jitter_rate_cps", rates);
        r.numbers(prefix + "jitter_fwhm_ps", widths);
        if (rates.size() != widths.size())
            throw ConfigError(prefix + "jitter_rate_cps and jitter_fwhm_ps differ in length");
        timing.jitter_table.clear();
        for (std::size_t i = 0; i < rates.size(); ++i) timing.jitter_table.push_back({rates[i], widths[i]});
        r.number(prefix + "centroid_alpha", timing.centroid_alpha);
        r.number(prefix + "tail_fraction", timing.tail_fraction);
        r.number(prefix + "tail_tau_ps", timing.tail_tau_ps);
    }

    r.number("gate.gate_fraction", c.gate.gate_fraction);
    r.number("gate.window_offset_ps", c.gate.window_offset_ps);
    r.number("sync.sync_fwhm_ps", c.sync_fwhm_ps);
    r.number("security.qber_secure_threshold", c.security.qber_secure_threshold);
    r.number("security.ec_inefficiency_f", c.security.ec_inefficiency_f);
    r.integer("run.n_slots", c.n_slots);
    r.integer("run.seed", c.seed);
    r.integer("run.workers", c.workers);
    return c;
}

void reject_unknown_keys(const ConfigTable& table) {
    if (table.empty()) return;
    const auto& [k, v] = *table.begin();
    throw ConfigError("line " + std::to_string(v.line) + ": unknown key " + k);
}

SimConfig parse_config(std::string_view text) {
    auto table = parse_table(text);
    auto config = config_from_table(table);
    reject_unknown_keys(table);
    config.validate();
    return config;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SimConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string format_array(const std::vector<double>& values) {
    std::string s = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ", ";
        s += format_number(values[i]);
    }
    return s + "]";
}

} // namespace

std::string to_toml(const SimConfig& c) {
    std::ostringstream o;
    const auto num = [&](const char* key, double v) { o << key << " = " << format_number(v) << '\n'; };
    o << "[meta]\nname = \"" << c.name << "\"\n\n[source]\n";
    num("clock_hz", c.source.clock_hz);
    num("mean_photon_number", c.source.mean_photon_number);
    num("wavelength_nm", c.source.wavelength_nm);
    num("sync_wavelength_nm", c.source.sync_wavelength_nm);
    num("base_pulse_fwhm_ps", c.source.base_pulse_fwhm_ps);
    num("emitter_bandwidth_hz", c.source.emitter_bandwidth_hz);
    o << "single_photon = " << (c.source.single_photon ? "true" : "false") << '\n';
    o << "\n[channel]\n";
    num("length_km", c.channel.length_km);
    num("atten_db_per_km", c.channel.atten_db_per_km);
    num("broadening_ps_per_km", c.channel.broadening_ps_per_km);
    o << "mode = \"" << to_string(c.channel.mode) << "\"\n";
    num("excess_loss_db", c.channel.excess_loss_db);
    o << "\n[detector]\nprofile = \"" << c.profile << "\"\n";
    num("efficiency", c.efficiency);
    num("dark_cps", c.dark_cps);
    num("dead_time_ns", c.dead_time_ns);
    for (const auto& [n, t] : c.profiles) {
        std::vector<double> rates, widths;
        for (const auto& p : t.jitter_table) {
            rates.push_back(p.rate_cps);
            widths.push_back(p.fwhm_ps);
        }
        o << "\n[profile." << n << "]\n";
        o << "jitter_rate_cps = " << format_array(rates) << '\n';
        o << "jitter_fwhm_ps = " << format_array(widths) << '\n';
        num("centroid_alpha", t.centroid_alpha);
        num("tail_fraction", t.tail_fraction);
        num("tail_tau_ps", t.tail_tau_ps);
    }
    o << "\n[gate]\n";
    num("gate_fraction", c.gate.gate_fraction);
    num("window_offset_ps", c.gate.window_offset_ps);
    o << "\n[sync]\n";
    num("sync_fwhm_ps", c.sync_fwhm_ps);
    o << "\n[security]\n";
    num("qber_secure_threshold", c.security.qber_secure_threshold);
    num("ec_inefficiency_f", c.security.ec_inefficiency_f);
    o << "\n[run]\nn_slots = " << c.n_slots << "\nseed = " << c.seed << "\nworkers = " << c.workers << '\n';
    return o.str();
}

} // namespace b92
