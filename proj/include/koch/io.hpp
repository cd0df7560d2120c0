#pragma once

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "koch/tube_formula.hpp"

namespace koch {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

inline double parse_field(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw Error("");
        return v;
    } catch (...) {
        throw Error(std::string("csv: bad ") + what + " field: '" + s + "'");
    }
}

}  // namespace detail

// ---- TubeTable CSV: eps,volume,err ----

inline void write_tube_csv(std::ostream& os, const TubeTable& table) {
    os << "eps,volume,err\n";
    for (const auto& s : table.samples())
        os << fmt_double(s.eps) << ',' << fmt_double(s.volume) << ',' << fmt_double(s.err)
           << '\n';
}

inline TubeTable read_tube_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error("csv: empty tube table file");
    if (line.rfind("eps,volume,err", 0) != 0)
        throw Error("csv: expected header 'eps,volume,err', got '" + line + "'");
    std::vector<TubeSample> samples;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 3) throw Error("csv: tube table rows need 3 fields");
        samples.push_back({detail::parse_field(f[0], "eps"),
                           detail::parse_field(f[1], "volume"),
                           detail::parse_field(f[2], "err")});
    }
    return TubeTable(std::move(samples));
}

// ---- ResidualTable CSV: eps,residual,bound,err ----

inline void write_residual_csv(std::ostream& os, const ResidualTable& res,
                               double bound_coefficient) {
    os << "eps,residual,bound,err\n";
    for (const auto& s : res.samples())
        os << fmt_double(s.eps) << ',' << fmt_double(s.residual) << ','
           << fmt_double(bound_coefficient * s.eps * s.eps) << ',' << fmt_double(s.err) << '\n';
}

inline ResidualTable read_residual_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error("csv: empty residual table file");
    if (line.rfind("eps,residual,bound,err", 0) != 0)
        throw Error("csv: expected header 'eps,residual,bound,err', got '" + line + "'");
    std::vector<ResidualSample> samples;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 4) throw Error("csv: residual table rows need 4 fields");
        samples.push_back({detail::parse_field(f[0], "eps"),
                           detail::parse_field(f[1], "residual"),
                           detail::parse_field(f[3], "err")});
    }
    return ResidualTable(std::move(samples));
}

// ---- Roots JSON: [{re, im, order, residue_re, residue_im, method}] ----

inline const char* method_name(ComplexRoot::Method m) {
    return m == ComplexRoot::Method::newton ? "newton" : "lattice-closed-form";
}

inline nlohmann::json roots_to_json(const std::vector<ComplexRoot>& roots) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : roots) {
        arr.push_back({{"re", r.omega.real()},
                       {"im", r.omega.imag()},
                       {"order", r.order},
                       {"residue_re", r.residue_zeta_L.real()},
                       {"residue_im", r.residue_zeta_L.imag()},
                       {"method", method_name(r.method)}});
    }
    return arr;
}

inline std::vector<ComplexRoot> roots_from_json(const nlohmann::json& arr) {
    std::vector<ComplexRoot> out;
    for (const auto& j : arr) {
        ComplexRoot r;
        r.omega = Complex(j.at("re").get<double>(), j.at("im").get<double>());
        r.order = j.at("order").get<int>();
        r.residue_zeta_L =
            Complex(j.at("residue_re").get<double>(), j.at("residue_im").get<double>());
        r.method = j.at("method").get<std::string>() == "newton"
                       ? ComplexRoot::Method::newton
                       : ComplexRoot::Method::lattice_closed_form;
        out.push_back(r);
    }
    return out;
}

// ---- Zeta grid CSV: re,im,val_re,val_im,path,err ----

struct ZetaGridRow {
    Complex s;
    Complex value;
    std::string path;  // direct | continued | skipped
    double err = 0.0;
};

inline void write_zeta_grid_csv(std::ostream& os, const std::vector<ZetaGridRow>& rows) {
    os << "re,im,val_re,val_im,path,err\n";
    for (const auto& r : rows)
        os << fmt_double(r.s.real()) << ',' << fmt_double(r.s.imag()) << ','
           << fmt_double(r.value.real()) << ',' << fmt_double(r.value.imag()) << ',' << r.path
           << ',' << fmt_double(r.err) << '\n';
}

// ---- Reconstruction report CSV + summary JSON ----

inline void write_report_csv(std::ostream& os, const ReconstructionReport& rep) {
    os << "t,measured,reconstructed,abs_err,rel_err\n";
    for (const auto& r : rep.rows)
        os << fmt_double(r.t) << ',' << fmt_double(r.measured) << ','
           << fmt_double(r.reconstructed) << ',' << fmt_double(r.abs_err) << ','
           << fmt_double(r.rel_err) << '\n';
}

inline nlohmann::json report_summary_json(const ReconstructionReport& rep) {
    return {{"k", rep.k},
            {"truncation_T", rep.truncation_T},
            {"max_rel_err", rep.max_rel_err},
            {"l2_rel_err", rep.l2_rel_err},
            {"beta", rep.beta},
            {"points", rep.rows.size()}};
}

// ---- Vertices CSV: x,y ----

inline void write_vertices_csv(std::ostream& os, const std::vector<Vec2>& vertices) {
    os << "x,y\n";
    for (const Vec2& v : vertices) os << fmt_double(v.x) << ',' << fmt_double(v.y) << '\n';
}

// ---- SVG emitter ----

inline void write_svg(std::ostream& os, const std::vector<Vec2>& vertices, bool closed) {
    if (vertices.empty()) throw Error("svg: empty vertex list");
    BBox bb = bounding_box(vertices);
    double w = bb.hi.x - bb.lo.x, h = bb.hi.y - bb.lo.y;
    double pad = 0.02 * std::max(w, h);
    if (pad == 0.0) pad = 1.0;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt_double(bb.lo.x - pad)
       << ' ' << fmt_double(-(bb.hi.y + pad)) << ' ' << fmt_double(w + 2 * pad) << ' '
       << fmt_double(h + 2 * pad) << "\">\n";
    os << "<path fill=\"none\" stroke=\"black\" stroke-width=\""
       << fmt_double(std::max(w, h) / 1024.0) << "\" d=\"";
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        os << (i == 0 ? 'M' : 'L') << fmt_double(vertices[i].x) << ' '
           << fmt_double(-vertices[i].y);
    }
    if (closed) os << 'Z';
    os << "\"/>\n</svg>\n";
}

inline void save_text(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open output file: " + path);
    os << content;
}

}  // namespace koch
