#include "mgcn/config.hpp"

#include "mgcn/error.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace mgcn {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join_list(const std::vector<std::string>& v)
{
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

std::string fmt(double v)
{
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

double to_double(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ValidationError("config: '" + key + "' expects a number, got '" + v + "'");
    return x;
}

long long to_int(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ValidationError("config: '" + key + "' expects an integer, got '" + v + "'");
    return x;
}

// Field accessors keyed by "section.key", shared by the reader and the writer.
struct Field {
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
};

template <typename T>
Field int_field(T PipelineConfig::*outer)
{
    return {[outer](const PipelineConfig& c) { return std::to_string(c.*outer); },
        [outer](PipelineConfig& c, const std::string& k, const std::string& v) {
            c.*outer = static_cast<T>(to_int(k, v));
        }};
}

const std::vector<std::pair<std::string, Field>>& fields()
{
    using C = PipelineConfig;
    static const std::vector<std::pair<std::string, Field>> table = {
        {"data.meshes", {[](const C& c) { return join_list(c.meshes); },
                            [](C& c, const std::string&, const std::string& v) { c.meshes = split_list(v); }}},
        {"data.labels", {[](const C& c) { return join_list(c.labels); },
                            [](C& c, const std::string&, const std::string& v) { c.labels = split_list(v); }}},
        {"data.output", {[](const C& c) { return c.output; }, [](C& c, const std::string&, const std::string& v) { c.output = v; }}},
        {"data.checkpoint",
            {[](const C& c) { return c.checkpoint; }, [](C& c, const std::string&, const std::string& v) { c.checkpoint = v; }}},

        {"descriptor.type", {[](const C& c) { return c.descriptor.type; },
                                [](C& c, const std::string&, const std::string& v) { c.descriptor.type = v; }}},
        {"descriptor.k", {[](const C& c) { return std::to_string(c.descriptor.k); },
                             [](C& c, const std::string& k, const std::string& v) { c.descriptor.k = to_int(k, v); }}},
        {"descriptor.num", {[](const C& c) { return std::to_string(c.descriptor.num); },
                               [](C& c, const std::string& k, const std::string& v) {
                                   c.descriptor.num = static_cast<int>(to_int(k, v));
                               }}},
        {"descriptor.scales", {[](const C& c) { return std::to_string(c.descriptor.num_scales); },
                                  [](C& c, const std::string& k, const std::string& v) {
                                      c.descriptor.num_scales = static_cast<int>(to_int(k, v));
                                  }}},
        {"descriptor.A", {[](const C& c) { return fmt(c.descriptor.constants.A); },
                             [](C& c, const std::string& k, const std::string& v) { c.descriptor.constants.A = to_double(k, v); }}},
        {"descriptor.B", {[](const C& c) { return fmt(c.descriptor.constants.B); },
                             [](C& c, const std::string& k, const std::string& v) { c.descriptor.constants.B = to_double(k, v); }}},
        {"descriptor.C", {[](const C& c) { return fmt(c.descriptor.constants.C); },
                             [](C& c, const std::string& k, const std::string& v) { c.descriptor.constants.C = to_double(k, v); }}},
        {"descriptor.D", {[](const C& c) { return fmt(c.descriptor.constants.D); },
                             [](C& c, const std::string& k, const std::string& v) { c.descriptor.constants.D = to_double(k, v); }}},
        {"descriptor.E", {[](const C& c) { return fmt(c.descriptor.constants.E); },
                             [](C& c, const std::string& k, const std::string& v) { c.descriptor.constants.E = to_double(k, v); }}},
        {"descriptor.frame_tolerance",
            {[](const C& c) { return fmt(c.descriptor.frame_tolerance); },
                [](C& c, const std::string& k, const std::string& v) { c.descriptor.frame_tolerance = to_double(k, v); }}},

        {"model.architecture", {[](const C& c) { return c.architecture; },
                                   [](C& c, const std::string&, const std::string& v) { c.architecture = v; }}},
        {"model.operators", {[](const C& c) { return c.operators; },
                                [](C& c, const std::string&, const std::string& v) { c.operators = v; }}},
        {"model.input_dim", int_field(&C::input_dim)},

        {"train.phase1_epochs", {[](const C& c) { return std::to_string(c.train.phase1_epochs); },
                                    [](C& c, const std::string& k, const std::string& v) {
                                        c.train.phase1_epochs = static_cast<int>(to_int(k, v));
                                    }}},
        {"train.phase1_lr", {[](const C& c) { return fmt(c.train.phase1.lr); },
                                [](C& c, const std::string& k, const std::string& v) { c.train.phase1.lr = to_double(k, v); }}},
        {"train.phase1_weight_decay",
            {[](const C& c) { return fmt(c.train.phase1.weight_decay); },
                [](C& c, const std::string& k, const std::string& v) { c.train.phase1.weight_decay = to_double(k, v); }}},
        {"train.phase2_epochs", {[](const C& c) { return std::to_string(c.train.phase2_epochs); },
                                    [](C& c, const std::string& k, const std::string& v) {
                                        c.train.phase2_epochs = static_cast<int>(to_int(k, v));
                                    }}},
        {"train.phase2_lr", {[](const C& c) { return fmt(c.train.phase2.lr); },
                                [](C& c, const std::string& k, const std::string& v) { c.train.phase2.lr = to_double(k, v); }}},
        {"train.phase2_weight_decay",
            {[](const C& c) { return fmt(c.train.phase2.weight_decay); },
                [](C& c, const std::string& k, const std::string& v) { c.train.phase2.weight_decay = to_double(k, v); }}},
        {"train.beta1", {[](const C& c) { return fmt(c.train.phase1.beta1); },
                            [](C& c, const std::string& k, const std::string& v) {
                                c.train.phase1.beta1 = c.train.phase2.beta1 = to_double(k, v);
                            }}},
        {"train.beta2", {[](const C& c) { return fmt(c.train.phase1.beta2); },
                            [](C& c, const std::string& k, const std::string& v) {
                                c.train.phase1.beta2 = c.train.phase2.beta2 = to_double(k, v);
                            }}},
        {"train.eps", {[](const C& c) { return fmt(c.train.phase1.eps); },
                          [](C& c, const std::string& k, const std::string& v) {
                              c.train.phase1.eps = c.train.phase2.eps = to_double(k, v);
                          }}},
        {"train.margin", {[](const C& c) { return fmt(c.train.margin); },
                             [](C& c, const std::string& k, const std::string& v) { c.train.margin = to_double(k, v); }}},
        {"train.pairs_per_step", {[](const C& c) { return std::to_string(c.train.pairs_per_step); },
                                     [](C& c, const std::string& k, const std::string& v) {
                                         c.train.pairs_per_step = static_cast<int>(to_int(k, v));
                                     }}},
        {"train.seed", {[](const C& c) { return std::to_string(c.train.seed); },
                           [](C& c, const std::string& k, const std::string& v) {
                               const long long s = to_int(k, v);
                               if (s < 0) throw ValidationError("config: seed must be non-negative");
                               c.train.seed = static_cast<std::uint64_t>(s);
                           }}},
    };
    return table;
}

void check(const PipelineConfig& c)
{
    if (c.descriptor.num < 1 || c.descriptor.k < 2 || c.descriptor.num_scales < 1) {
        throw ValidationError("config: descriptor sizes must be positive (k >= 2)");
    }
    if (c.train.phase1_epochs < 0 || c.train.phase2_epochs < 0) throw ValidationError("config: negative epoch count");
    if (!(c.train.phase1.lr > 0.0) || !(c.train.phase2.lr > 0.0)) throw ValidationError("config: learning rates must be positive");
    if (c.train.phase1.weight_decay < 0.0 || c.train.phase2.weight_decay < 0.0) {
        throw ValidationError("config: weight decay must be non-negative");
    }
    if (c.train.pairs_per_step < 2) throw ValidationError("config: pairs_per_step must be at least 2");
    if (!c.labels.empty() && c.labels.size() != c.meshes.size()) {
        throw ValidationError("config: one labels file per mesh required");
    }
    Architecture::parse(c.architecture);
    operator_kind_from_string(c.operators);
}

} // namespace

std::string PipelineConfig::to_text() const
{
    std::ostringstream out;
    std::string section;
    for (const auto& [key, field] : fields()) {
        const auto dot = key.find('.');
        const std::string s = key.substr(0, dot);
        if (s != section) {
            if (!section.empty()) out << '\n';
            out << '[' << s << "]\n";
            section = s;
        }
        out << key.substr(dot + 1) << " = " << field.get(*this) << '\n';
    }
    return out.str();
}

PipelineConfig PipelineConfig::parse(const std::string& text)
{
    std::map<std::string, const Field*> index;
    for (const auto& [key, field] : fields()) index.emplace(key, &field);

    PipelineConfig c;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ValidationError(where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "data" && section != "descriptor" && section != "model" && section != "train") {
                throw ValidationError(where + "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError(where + "expected key = value");
        if (section.empty()) throw ValidationError(where + "key outside of a section");
        const std::string key = section + "." + trim(line.substr(0, eq));
        const auto it = index.find(key);
        if (it == index.end()) throw ValidationError(where + "unknown key '" + key + "'");
        it->second->set(c, key, trim(line.substr(eq + 1)));
    }
    check(c);
    return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

} // namespace mgcn
