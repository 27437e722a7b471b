// Runs the command-line tool on generated fixtures and checks outputs and exit codes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "bbalign/io.hpp"
#include "bbalign/pipeline.hpp"
#include "scene.hpp"

using namespace bbalign;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(BBALIGN_CLI_PATH) + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_fixtures() {
    const auto pts = scene::three_patch_surface(1200, 4);
    const auto rc = scene::random_rigid(5, 0.3);
    WeightedCloud src, tgt;
    src.points = pts;
    tgt.points = apply_transform(rc.q, rc.t, pts);
    write_ply(src, "cli_source.ply", PlyEncoding::Ascii);
    write_ply(tgt, "cli_target.ply", PlyEncoding::BinaryLittleEndian);
    std::ofstream truth("cli_truth.txt");
    truth.precision(17);
    truth << rc.q.i << ' ' << rc.q.j << ' ' << rc.q.k << ' ' << rc.q.r << ' ' << rc.t.x() << ' ' << rc.t.y() << ' '
          << rc.t.z() << '\n';
}

std::string viewpoints() {
    const auto rc = scene::random_rigid(5, 0.3);
    const Vec3 v = scene::scene_viewpoint();
    const Vec3 w = rotate(rc.q, v) + rc.t;
    char buf[256];
    std::snprintf(buf, sizeof buf, " --source-viewpoint %.17g,%.17g,%.17g --target-viewpoint %.17g,%.17g,%.17g",
                  v.x(), v.y(), v.z(), w.x(), w.y(), w.z());
    return buf;
}

}  // namespace

TEST_CASE("align end to end") {
    write_fixtures();
    const int code = run("align --source cli_source.ply --target cli_target.ply --lambda-deg 65 --rot-depth 8 "
                         "--trans-depth 8 --out cli_result.json --trace cli_trace.csv --tess-cache cli_tess.bin" +
                         viewpoints());
    REQUIRE(code == 0);
    const AlignmentResult r = read_result("cli_result.json");
    const auto rc = scene::random_rigid(5, 0.3);
    CHECK(rad_to_deg(rotation_angle(r.q, rc.q)) < 2.0);
    CHECK((r.t - rc.t).norm() < std::ldexp(r.root_box.diagonal(), -7));
    CHECK(r.rot_depth == 8);
    CHECK(r.trans_depth == 8);
    const std::string trace = read_file("cli_trace.csv");
    CHECK(trace.rfind("iter,stage,depth,nodes_active,best_L,best_U,gap\n", 0) == 0);

    // The cache written by the first run is reused.
    CHECK(run("align --source cli_source.ply --target cli_target.ply --lambda-deg 65 --rot-depth 4 "
              "--trans-depth 4 --out cli_result2.json --tess-cache cli_tess.bin") == 0);
}

TEST_CASE("tessellation export") {
    REQUIRE(run("tessellation --out cli_tess_export.bin") == 0);
    const Tessellation t = load_tessellation("cli_tess_export.bin");
    CHECK(t.hemisphere_cells.size() == 330);
}

TEST_CASE("exit codes") {
    write_file("cli_bad.ply", "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\n"
                              "property float z\nend_header\n0 0 0\n1 0 0\n");
    CHECK(run("align --source cli_bad.ply --target cli_bad.ply --out x.json") == 2);
    CHECK(run("align --source cli_source.ply --out x.json") == 2);
    CHECK(run("bogus") == 2);

    // A well-formed cache whose cells are not regular tetrahedra.
    std::string cache = read_file("cli_tess_export.bin");
    const std::size_t cells = 8 + 120 * 4 * 8;
    cache[cells] = cache[cells + 2];
    write_file("cli_tess_broken.bin", cache);
    CHECK(run("align --source cli_source.ply --target cli_target.ply --rot-depth 2 --trans-depth 2 --out x.json "
              "--tess-cache cli_tess_broken.bin") == 3);
}
