#include "mgcn/mesh_io.hpp"

#include "mgcn/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mgcn {

namespace {

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

TriMesh assemble(const std::vector<double>& coords, const std::vector<int>& indices)
{
    const auto n = static_cast<Eigen::Index>(coords.size() / 3);
    const auto m = static_cast<Eigen::Index>(indices.size() / 3);
    RowMatrix3d V(n, 3);
    RowMatrix3i F(m, 3);
    std::copy(coords.begin(), coords.end(), V.data());
    std::copy(indices.begin(), indices.end(), F.data());
    return TriMesh::make(std::move(V), std::move(F));
}

void push_polygon(std::vector<int>& indices, const std::vector<int>& poly)
{
    if (poly.size() < 3) {
        throw ValidationError("face with fewer than 3 vertices");
    }
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        indices.push_back(poly[0]);
        indices.push_back(poly[i]);
        indices.push_back(poly[i + 1]);
    }
}

// Next non-empty, non-comment line.
bool next_content_line(std::istream& in, std::string& line)
{
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
}

// PLY scalar types.
enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parse_ply_type(const std::string& name)
{
    static const std::pair<const char*, PlyType> table[] = {
        {"char", PlyType::Int8}, {"int8", PlyType::Int8}, {"uchar", PlyType::UInt8}, {"uint8", PlyType::UInt8},
        {"short", PlyType::Int16}, {"int16", PlyType::Int16}, {"ushort", PlyType::UInt16},
        {"uint16", PlyType::UInt16}, {"int", PlyType::Int32}, {"int32", PlyType::Int32},
        {"uint", PlyType::UInt32}, {"uint32", PlyType::UInt32}, {"float", PlyType::Float32},
        {"float32", PlyType::Float32}, {"double", PlyType::Float64}, {"float64", PlyType::Float64},
    };
    for (const auto& [key, type] : table) {
        if (name == key) return type;
    }
    throw ValidationError("PLY: unknown property type '" + name + "'");
}

std::size_t ply_size(PlyType t)
{
    switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

double read_binary(std::istream& in, PlyType t)
{
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(ply_size(t)));
    if (!in) throw ValidationError("PLY: unexpected end of binary data");
    switch (t) {
    case PlyType::Int8: { std::int8_t v; std::memcpy(&v, buf, 1); return v; }
    case PlyType::UInt8: return buf[0];
    case PlyType::Int16: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
    case PlyType::UInt16: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
    case PlyType::Int32: { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
    case PlyType::UInt32: { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
    case PlyType::Float32: { float v; std::memcpy(&v, buf, 4); return v; }
    case PlyType::Float64: { double v; std::memcpy(&v, buf, 8); return v; }
    }
    return 0.0;
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

} // namespace

MeshFormat format_from_path(const std::filesystem::path& path)
{
    const std::string ext = lower(path.extension().string());
    if (ext == ".off") return MeshFormat::Off;
    if (ext == ".obj") return MeshFormat::Obj;
    if (ext == ".ply") return MeshFormat::Ply;
    throw ValidationError("cannot infer mesh format from extension '" + ext + "'");
}

TriMesh load_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format)
{
    const MeshFormat fmt = format ? *format : format_from_path(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open mesh file " + path.string());
    }
    switch (fmt) {
    case MeshFormat::Off: return read_off(in);
    case MeshFormat::Obj: return read_obj(in);
    case MeshFormat::Ply: return read_ply(in);
    }
    throw ValidationError("unsupported mesh format");
}

TriMesh read_off(std::istream& in)
{
    std::string line;
    if (!next_content_line(in, line)) throw ValidationError("OFF: empty file");
    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic.rfind("OFF", 0) != 0) throw ValidationError("OFF: missing OFF header");
    long nv = -1, nf = -1, ne = 0;
    // Counts may follow the magic on the same line.
    if (!(header >> nv >> nf >> ne)) {
        if (!next_content_line(in, line)) throw ValidationError("OFF: missing counts");
        std::istringstream counts(line);
        if (!(counts >> nv >> nf)) throw ValidationError("OFF: malformed counts");
    }
    if (nv <= 0 || nf <= 0) throw ValidationError("OFF: invalid counts");

    std::vector<double> coords;
    coords.reserve(static_cast<std::size_t>(3 * nv));
    for (long i = 0; i < nv; ++i) {
        if (!next_content_line(in, line)) throw ValidationError("OFF: truncated vertex list");
        std::istringstream row(line);
        double x, y, z;
        if (!(row >> x >> y >> z)) throw ValidationError("OFF: malformed vertex line " + std::to_string(i));
        coords.insert(coords.end(), {x, y, z});
    }
    std::vector<int> indices;
    for (long f = 0; f < nf; ++f) {
        if (!next_content_line(in, line)) throw ValidationError("OFF: truncated face list");
        std::istringstream row(line);
        int count = 0;
        if (!(row >> count) || count < 3) throw ValidationError("OFF: malformed face line " + std::to_string(f));
        std::vector<int> poly(static_cast<std::size_t>(count));
        for (auto& idx : poly) {
            if (!(row >> idx)) throw ValidationError("OFF: malformed face line " + std::to_string(f));
        }
        push_polygon(indices, poly);
    }
    return assemble(coords, indices);
}

TriMesh read_obj(std::istream& in)
{
    std::vector<double> coords;
    std::vector<int> indices;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string tag;
        if (!(row >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            if (!(row >> x >> y >> z)) throw ValidationError("OBJ: malformed vertex line");
            coords.insert(coords.end(), {x, y, z});
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string token;
            while (row >> token) {
                int raw = 0;
                try {
                    raw = std::stoi(token.substr(0, token.find('/')));
                } catch (const std::exception&) {
                    throw ValidationError("OBJ: malformed face index '" + token + "'");
                }
                const int nv = static_cast<int>(coords.size() / 3);
                // Negative indices are relative to the end of the vertex list.
                poly.push_back(raw > 0 ? raw - 1 : nv + raw);
            }
            push_polygon(indices, poly);
        }
    }
    if (coords.empty()) throw ValidationError("OBJ: no vertices");
    return assemble(coords, indices);
}

TriMesh read_ply(std::istream& in)
{
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw ValidationError("PLY: missing magic");
    bool binary = false;
    std::vector<PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream row(line);
        std::string tag;
        row >> tag;
        if (tag == "format") {
            std::string kind;
            row >> kind;
            if (kind == "binary_little_endian") binary = true;
            else if (kind != "ascii") throw ValidationError("PLY: unsupported format " + kind);
        } else if (tag == "element") {
            PlyElement el;
            row >> el.name >> el.count;
            elements.push_back(el);
        } else if (tag == "property") {
            if (elements.empty()) throw ValidationError("PLY: property before element");
            PlyProperty prop;
            std::string type;
            row >> type;
            if (type == "list") {
                std::string count_type, item_type;
                row >> count_type >> item_type >> prop.name;
                prop.is_list = true;
                prop.count_type = parse_ply_type(count_type);
                prop.type = parse_ply_type(item_type);
            } else {
                prop.type = parse_ply_type(type);
                row >> prop.name;
            }
            elements.back().properties.push_back(prop);
        } else if (tag == "end_header") {
            break;
        }
    }

    std::vector<double> coords;
    std::vector<int> indices;
    for (const auto& el : elements) {
        const bool is_vertex = el.name == "vertex";
        const bool is_face = el.name == "face";
        int xi = -1, yi = -1, zi = -1;
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
            if (el.properties[p].name == "x") xi = static_cast<int>(p);
            if (el.properties[p].name == "y") yi = static_cast<int>(p);
            if (el.properties[p].name == "z") zi = static_cast<int>(p);
        }
        if (is_vertex && (xi < 0 || yi < 0 || zi < 0)) throw ValidationError("PLY: vertex lacks x/y/z");

        for (std::size_t e = 0; e < el.count; ++e) {
            std::istringstream row;
            if (!binary) {
                if (!next_content_line(in, line)) throw ValidationError("PLY: truncated element data");
                row.str(line);
            }
            auto read_scalar = [&](PlyType t) {
                if (binary) return read_binary(in, t);
                double v;
                if (!(row >> v)) throw ValidationError("PLY: malformed element line");
                return v;
            };
            double xyz[3] = {0, 0, 0};
            for (std::size_t p = 0; p < el.properties.size(); ++p) {
                const auto& prop = el.properties[p];
                if (prop.is_list) {
                    const auto count = static_cast<std::size_t>(read_scalar(prop.count_type));
                    std::vector<int> poly(count);
                    for (auto& idx : poly) idx = static_cast<int>(read_scalar(prop.type));
                    if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
                        push_polygon(indices, poly);
                    }
                } else {
                    const double v = read_scalar(prop.type);
                    if (static_cast<int>(p) == xi) xyz[0] = v;
                    if (static_cast<int>(p) == yi) xyz[1] = v;
                    if (static_cast<int>(p) == zi) xyz[2] = v;
                }
            }
            if (is_vertex) coords.insert(coords.end(), {xyz[0], xyz[1], xyz[2]});
        }
    }
    return assemble(coords, indices);
}

void write_off(const std::filesystem::path& path, const TriMesh& mesh)
{
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << std::setprecision(17);
    out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << " 0\n";
    for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) {
        out << mesh.vertices()(i, 0) << ' ' << mesh.vertices()(i, 1) << ' ' << mesh.vertices()(i, 2) << '\n';
    }
    for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
        out << "3 " << mesh.triangles()(t, 0) << ' ' << mesh.triangles()(t, 1) << ' ' << mesh.triangles()(t, 2)
            << '\n';
    }
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh)
{
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) {
        out << "v " << mesh.vertices()(i, 0) << ' ' << mesh.vertices()(i, 1) << ' ' << mesh.vertices()(i, 2)
            << '\n';
    }
    for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
        out << "f " << mesh.triangles()(t, 0) + 1 << ' ' << mesh.triangles()(t, 1) + 1 << ' '
            << mesh.triangles()(t, 2) + 1 << '\n';
    }
}

void write_colored_ply(const std::filesystem::path& path, const TriMesh& mesh, const std::vector<Rgb>& colors)
{
    if (static_cast<Eigen::Index>(colors.size()) != mesh.num_vertices()) {
        throw ValidationError("color count does not match vertex count");
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.num_vertices() << '\n';
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "element face " << mesh.num_triangles() << '\n';
    out << "property list uchar int vertex_indices\nend_header\n";
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) {
        const auto& c = colors[static_cast<std::size_t>(i)];
        out << mesh.vertices()(i, 0) << ' ' << mesh.vertices()(i, 1) << ' ' << mesh.vertices()(i, 2) << ' '
            << int(c[0]) << ' ' << int(c[1]) << ' ' << int(c[2]) << '\n';
    }
    for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
        out << "3 " << mesh.triangles()(t, 0) << ' ' << mesh.triangles()(t, 1) << ' ' << mesh.triangles()(t, 2)
            << '\n';
    }
}

} // namespace mgcn
