#pragma once

// Legacy ASCII VTK RECTILINEAR_GRID files with POINT_DATA scalars, and CSV helpers.
// Numbers are printed with 17 significant digits.

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dduq/errors.hpp"
#include "dduq/grid.hpp"

namespace dduq::io {

struct NamedField {
    std::string name;
    std::vector<double> values;
};

struct VtkData {
    std::array<std::vector<double>, 3> axes;  ///< vertex coordinates per axis (z = {0} in 2D)
    std::vector<NamedField> fields;

    std::size_t num_points() const { return axes[0].size() * axes[1].size() * axes[2].size(); }

    const std::vector<double>& field(const std::string& name) const {
        for (const auto& f : fields)
            if (f.name == name) return f.values;
        throw ConfigError("vtk: no field named '" + name + "'");
    }
};

inline VtkData vtk_data(const StructuredGrid& g) {
    VtkData d;
    for (int a = 0; a < 3; ++a) {
        if (a < g.dim()) {
            for (int i = 0; i < g.n()[a]; ++i) d.axes[a].push_back(g.coord(a, i));
        } else {
            d.axes[a] = {0.0};
        }
    }
    return d;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline void write_vtk(const std::filesystem::path& path, const VtkData& d, const std::string& title) {
    const std::size_t np = d.num_points();
    for (const auto& f : d.fields) {
        if (f.values.size() != np) throw UsageError("write_vtk: field '" + f.name + "' has the wrong length");
        if (f.name.empty() || f.name.find_first_of(" \t\n") != std::string::npos)
            throw UsageError("write_vtk: invalid field name '" + f.name + "'");
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream os(tmp);
        if (!os) throw ConfigError("output: cannot open " + tmp.string());
        os << std::setprecision(17);
        os << "# vtk DataFile Version 3.0\n" << title.substr(0, 255) << "\nASCII\nDATASET RECTILINEAR_GRID\n";
        os << "DIMENSIONS " << d.axes[0].size() << ' ' << d.axes[1].size() << ' ' << d.axes[2].size() << '\n';
        const char* names[3] = {"X_COORDINATES", "Y_COORDINATES", "Z_COORDINATES"};
        for (int a = 0; a < 3; ++a) {
            os << names[a] << ' ' << d.axes[a].size() << " double\n";
            for (std::size_t i = 0; i < d.axes[a].size(); ++i) os << (i ? " " : "") << d.axes[a][i];
            os << '\n';
        }
        os << "POINT_DATA " << np << '\n';
        for (const auto& f : d.fields) {
            os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : f.values) os << v << '\n';
        }
        if (!os) throw ConfigError("output: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Reads files produced by write_vtk (and other single-block rectilinear files with double scalars).
inline VtkData read_vtk(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("input: cannot open " + path.string());
    std::string line;
    std::getline(is, line);
    if (line.rfind("# vtk DataFile", 0) != 0) throw ConfigError("input: " + path.string() + " is not a legacy VTK file");
    std::getline(is, line);  // title
    std::string tok;
    is >> tok;
    if (tok != "ASCII") throw ConfigError("input: only ASCII VTK is supported");
    is >> tok >> tok;
    if (tok != "RECTILINEAR_GRID") throw ConfigError("input: only RECTILINEAR_GRID datasets are supported");
    VtkData d;
    std::array<std::size_t, 3> dims{};
    is >> tok >> dims[0] >> dims[1] >> dims[2];
    if (tok != "DIMENSIONS" || !is) throw ConfigError("input: malformed DIMENSIONS");
    for (int a = 0; a < 3; ++a) {
        std::size_t n = 0;
        std::string type;
        is >> tok >> n >> type;
        if (n != dims[a] || !is) throw ConfigError("input: malformed coordinate block");
        d.axes[a].resize(n);
        for (auto& x : d.axes[a]) is >> x;
    }
    std::size_t np = 0;
    is >> tok >> np;
    if (tok != "POINT_DATA" || np != d.num_points()) throw ConfigError("input: malformed POINT_DATA");
    while (is >> tok) {
        if (tok != "SCALARS") throw ConfigError("input: unsupported VTK section '" + tok + "'");
        NamedField f;
        std::string type;
        is >> f.name >> type;
        std::getline(is, line);  // optional component count
        is >> tok >> tok;        // LOOKUP_TABLE default
        f.values.resize(np);
        for (auto& v : f.values) is >> v;
        if (!is) throw ConfigError("input: truncated scalars '" + f.name + "'");
        d.fields.push_back(std::move(f));
    }
    return d;
}

/// CSV writer; doubles at 17 significant digits.
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : path_(path) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        os_.open(path);
        if (!os_) throw ConfigError("output: cannot open " + path.string());
        os_ << std::setprecision(17);
    }

    void header(const std::vector<std::string>& cols) { row_strings(cols); }

    template <class... T>
    void row(const T&... v) {
        bool first = true;
        ((os_ << (first ? "" : ",") << v, first = false), ...);
        os_ << '\n';
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
    }

    void row_values(const std::vector<double>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
    }

private:
    std::filesystem::path path_;
    std::ofstream os_;
};

}  // namespace dduq::io
