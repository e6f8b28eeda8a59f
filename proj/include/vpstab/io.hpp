#pragma once

#include <map>
#include <string>

#include "vpstab/phase_df.hpp"
#include "vpstab/sim.hpp"

namespace vpstab {

/// VPDF v1 snapshot: magic 'V','P','D','F', u32 version, u32 n_slices;
/// per slice f64 ell, f64 weight, u32 nr, u32 nu, f64 r_edges[nr+1],
/// f64 u_edges[nu+1], f64 values[nr*nu] row-major in r; little-endian.
void writeSnapshot(const std::string& path, const PhaseDF& df);
PhaseDF readSnapshot(const std::string& path);

/// Minimal ordered JSON value for the report schemas: objects keep
/// insertion order and doubles print with 17 significant digits.
class Json {
public:
    static Json number(double v);
    static Json integer(long v);
    static Json text(std::string v);
    static Json boolean(bool v);
    static Json object();
    static Json array();

    Json& set(const std::string& key, Json v); // object insert, returns *this
    Json& push(Json v);                        // array append

    std::string dump(int indent = 0) const;
    bool allFinite() const;

private:
    enum class Kind { Number, Integer, Text, Bool, Object, Array } kind_ = Kind::Object;
    double num_ = 0.0;
    long int_ = 0;
    bool bool_ = false;
    std::string text_;
    std::vector<std::pair<std::string, Json>> members_;
    std::vector<Json> items_;
    void dumpTo(std::string& out, int indent, int depth) const;
};

/// key=value configuration with [section] headers; keys are stored as
/// "section.key" (or bare for the preamble). Flags override file values.
class RunConfig {
public:
    static RunConfig fromFile(const std::string& path);
    void setOverride(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback = "") const;
    double getDouble(const std::string& key, double fallback) const;
    long getLong(const std::string& key, long fallback) const;

    Json echo() const; // verbatim provenance block for the reports

private:
    std::map<std::string, std::string> values_;
};

void writeTimeSeriesCsv(const std::string& path, const std::vector<TimeSeriesRow>& rows);

void writeTextFile(const std::string& path, const std::string& content);

} // namespace vpstab
