#include <fstream>
#include <sstream>

#include "fiberlab/manifold.hpp"

namespace fiberlab {

namespace {

// Next non-empty, non-comment line.
bool next_line(std::istream& in, std::string& line, int& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
}

}  // namespace

TriMesh read_off(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open OFF file '" + path + "'");
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) {
        throw Error(path + ":" + std::to_string(lineno) + ": " + what);
    };
    if (!next_line(in, line, lineno)) fail("empty file");
    std::istringstream head(line);
    std::string magic;
    head >> magic;
    std::size_t nv = 0, nf = 0, ne = 0;
    if (magic != "OFF") fail("missing OFF header");
    if (!(head >> nv >> nf)) {
        if (!next_line(in, line, lineno)) fail("missing counts line");
        std::istringstream counts(line);
        if (!(counts >> nv >> nf)) fail("malformed counts line");
        counts >> ne;
    }
    TriMesh mesh;
    mesh.vertices.reserve(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        if (!next_line(in, line, lineno)) fail("unexpected end of vertex list");
        std::istringstream vs(line);
        double x, y, z;
        if (!(vs >> x >> y >> z)) fail("malformed vertex");
        mesh.vertices.emplace_back(x, y, z);
    }
    for (std::size_t f = 0; f < nf; ++f) {
        if (!next_line(in, line, lineno)) fail("unexpected end of face list");
        std::istringstream fs(line);
        int cnt = 0;
        if (!(fs >> cnt) || cnt < 3) fail("malformed face");
        std::vector<int> idx(static_cast<std::size_t>(cnt));
        for (auto& v : idx) {
            if (!(fs >> v) || v < 0 || static_cast<std::size_t>(v) >= nv) fail("bad vertex index in face");
        }
        // Polygons are fan-triangulated.
        for (int t = 1; t + 1 < cnt; ++t) mesh.faces.push_back({idx[0], idx[t], idx[t + 1]});
    }
    finalize_mesh(mesh);
    return mesh;
}

void write_off(const std::string& path, const std::vector<Eigen::Vector3d>& vertices,
               const std::vector<std::array<int, 3>>& faces) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write OFF file '" + path + "'");
    out.precision(17);
    out << "OFF\n" << vertices.size() << ' ' << faces.size() << " 0\n";
    for (const auto& v : vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& f : faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

void finalize_mesh(TriMesh& mesh) {
    const std::size_t n = mesh.vertices.size();
    mesh.vertex_faces.assign(n, {});
    std::vector<Eigen::Vector3d> normal(n, Eigen::Vector3d::Zero());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        const Eigen::Vector3d an =
            (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
        for (int v : t) {
            mesh.vertex_faces[v].push_back(static_cast<int>(f));
            normal[v] += an;
        }
    }
    mesh.frames.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector3d nv = normal[i].norm() > 0 ? normal[i].normalized() : Eigen::Vector3d::UnitZ();
        // First tangent: the world axis least aligned with the normal, projected.
        Eigen::Vector3d ref = Eigen::Vector3d::UnitX();
        if (std::abs(nv.dot(ref)) > 0.9) ref = Eigen::Vector3d::UnitY();
        Eigen::Vector3d e1 = (ref - ref.dot(nv) * nv).normalized();
        Eigen::Vector3d e2 = nv.cross(e1);
        mesh.frames[i].col(0) = e1;
        mesh.frames[i].col(1) = e2;
    }
}

}  // namespace fiberlab
