#include "vpstab/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace vpstab {

namespace {

// explicit little-endian scalar I/O
template <class T>
void putLE(std::string& out, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
#endif
    out.append(reinterpret_cast<char*>(b), sizeof(T));
}

template <class T>
T getLE(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw std::runtime_error("VPDF: truncated payload");
    unsigned char b[sizeof(T)];
    std::memcpy(b, in.data() + pos, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
#endif
    pos += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

} // namespace

void writeSnapshot(const std::string& path, const PhaseDF& df) {
    std::string buf;
    buf.reserve(64 + df.slices.size() * 1024);
    buf.append("VPDF", 4);
    putLE<std::uint32_t>(buf, 1u);
    putLE<std::uint32_t>(buf, std::uint32_t(df.slices.size()));
    for (const auto& sl : df.slices) {
        putLE<double>(buf, sl.ell);
        putLE<double>(buf, sl.weight);
        putLE<std::uint32_t>(buf, std::uint32_t(sl.nr()));
        putLE<std::uint32_t>(buf, std::uint32_t(sl.nu()));
        for (double v : sl.rEdges) putLE<double>(buf, v);
        for (double v : sl.uEdges) putLE<double>(buf, v);
        for (double v : sl.f) putLE<double>(buf, v);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("writeSnapshot: cannot open " + path);
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out) throw std::runtime_error("writeSnapshot: write failed for " + path);
}

PhaseDF readSnapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("readSnapshot: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    if (buf.size() < 12 || buf.compare(0, 4, "VPDF") != 0)
        throw std::runtime_error("VPDF: bad magic");
    pos = 4;
    std::uint32_t version = getLE<std::uint32_t>(buf, pos);
    if (version != 1u) throw std::runtime_error("VPDF: unsupported version");
    std::uint32_t nSlices = getLE<std::uint32_t>(buf, pos);
    PhaseDF df;
    df.slices.resize(nSlices);
    for (auto& sl : df.slices) {
        sl.ell = getLE<double>(buf, pos);
        sl.weight = getLE<double>(buf, pos);
        std::uint32_t nr = getLE<std::uint32_t>(buf, pos);
        std::uint32_t nu = getLE<std::uint32_t>(buf, pos);
        if (nr == 0 || nu == 0 || nr > (1u << 20) || nu > (1u << 20))
            throw std::runtime_error("VPDF: implausible grid size");
        sl.rEdges.resize(nr + 1);
        sl.uEdges.resize(nu + 1);
        for (auto& v : sl.rEdges) v = getLE<double>(buf, pos);
        for (auto& v : sl.uEdges) v = getLE<double>(buf, pos);
        sl.f.resize(std::size_t(nr) * nu);
        for (auto& v : sl.f) v = getLE<double>(buf, pos);
        sl.measure.resize(sl.f.size());
        for (std::uint32_t i = 0; i < nr; ++i)
            for (std::uint32_t j = 0; j < nu; ++j)
                sl.measure[sl.index(int(i), int(j))] = cellMeasure(
                    sl.ell, sl.rEdges[i], sl.rEdges[i + 1], sl.uEdges[j], sl.uEdges[j + 1]);
    }
    if (pos != buf.size()) throw std::runtime_error("VPDF: trailing bytes");
    df.linfBound = df.linf();
    return df;
}

Json Json::number(double v) {
    Json j;
    j.kind_ = Kind::Number;
    j.num_ = v;
    return j;
}
Json Json::integer(long v) {
    Json j;
    j.kind_ = Kind::Integer;
    j.int_ = v;
    return j;
}
Json Json::text(std::string v) {
    Json j;
    j.kind_ = Kind::Text;
    j.text_ = std::move(v);
    return j;
}
Json Json::boolean(bool v) {
    Json j;
    j.kind_ = Kind::Bool;
    j.bool_ = v;
    return j;
}
Json Json::object() {
    Json j;
    j.kind_ = Kind::Object;
    return j;
}
Json Json::array() {
    Json j;
    j.kind_ = Kind::Array;
    return j;
}

Json& Json::set(const std::string& key, Json v) {
    members_.emplace_back(key, std::move(v));
    return *this;
}

Json& Json::push(Json v) {
    items_.push_back(std::move(v));
    return *this;
}

namespace {
void escape(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (c == '\n') {
            out += "\\n";
        } else {
            out += c;
        }
    }
    out += '"';
}
} // namespace

void Json::dumpTo(std::string& out, int indent, int depth) const {
    auto pad = [&](int d) {
        if (indent > 0) {
            out += '\n';
            out.append(std::size_t(indent) * d, ' ');
        }
    };
    char buf[64];
    switch (kind_) {
    case Kind::Number:
        std::snprintf(buf, sizeof buf, "%.17g", num_);
        out += buf;
        break;
    case Kind::Integer:
        std::snprintf(buf, sizeof buf, "%ld", int_);
        out += buf;
        break;
    case Kind::Bool:
        out += bool_ ? "true" : "false";
        break;
    case Kind::Text:
        escape(out, text_);
        break;
    case Kind::Object: {
        out += '{';
        bool first = true;
        for (const auto& [k, v] : members_) {
            if (!first) out += ',';
            first = false;
            pad(depth + 1);
            escape(out, k);
            out += indent > 0 ? ": " : ":";
            v.dumpTo(out, indent, depth + 1);
        }
        if (!first) pad(depth);
        out += '}';
        break;
    }
    case Kind::Array: {
        out += '[';
        bool first = true;
        for (const auto& v : items_) {
            if (!first) out += ',';
            first = false;
            pad(depth + 1);
            v.dumpTo(out, indent, depth + 1);
        }
        if (!first) pad(depth);
        out += ']';
        break;
    }
    }
}

std::string Json::dump(int indent) const {
    std::string out;
    dumpTo(out, indent, 0);
    out += '\n';
    return out;
}

bool Json::allFinite() const {
    switch (kind_) {
    case Kind::Number:
        return std::isfinite(num_);
    case Kind::Object:
        for (const auto& [k, v] : members_) {
            (void)k;
            if (!v.allFinite()) return false;
        }
        return true;
    case Kind::Array:
        for (const auto& v : items_)
            if (!v.allFinite()) return false;
        return true;
    default:
        return true;
    }
}

RunConfig RunConfig::fromFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("RunConfig: cannot open " + path);
    RunConfig cfg;
    std::string line, section;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto strip = [](std::string s) {
            std::size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            std::size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        line = strip(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = strip(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = strip(line.substr(0, eq));
        std::string val = strip(line.substr(eq + 1));
        cfg.values_[section.empty() ? key : section + "." + key] = val;
    }
    return cfg;
}

void RunConfig::setOverride(const std::string& key, const std::string& value) {
    values_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double RunConfig::getDouble(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::strtod(it->second.c_str(), nullptr);
}

long RunConfig::getLong(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::strtol(it->second.c_str(), nullptr, 10);
}

Json RunConfig::echo() const {
    Json obj = Json::object();
    for (const auto& [k, v] : values_) obj.set(k, Json::text(v));
    return obj;
}

void writeTimeSeriesCsv(const std::string& path, const std::vector<TimeSeriesRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("writeTimeSeriesCsv: cannot open " + path);
    out << "t,mass,kinetic,field,hamiltonian,dL1_to_Q,dKin_to_Q,dGradPhi_to_Q\n";
    char buf[360];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.mass,
                      r.kinetic, r.fieldEnergy, r.hamiltonian, r.dL1, r.dKin, r.dGradPhi);
        out << buf;
    }
}

void writeTextFile(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("writeTextFile: cannot open " + path);
    out << content;
    if (!out) throw std::runtime_error("writeTextFile: write failed for " + path);
}

} // namespace vpstab
