// Command-line front end: global point cloud alignment and tessellation export.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "bbalign/errors.hpp"
#include "bbalign/io.hpp"
#include "bbalign/pipeline.hpp"
#include "bbalign/tess_s3.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitInvariant = 3;

bbalign::Vec3 parse_vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Globally optimal rigid alignment of two point clouds"};
    app.require_subcommand(1);

    std::string source_path, target_path, out_path, trace_path, tess_cache;
    std::vector<double> lambda_deg{45.0, 65.0, 80.0};
    double lambda_x = 0.0;
    int rot_depth = -1, trans_depth = -1;
    double rot_tol_deg = -1.0, trans_tol = -1.0;
    bool mw = false, union_root_box = false, cone_extrema = false, no_share = false;
    std::size_t knn = 10;
    int threads = 1;
    std::uint64_t seed = 0;
    std::vector<double> source_view{0, 0, 0}, target_view{0, 0, 0};

    auto* align_cmd = app.add_subcommand("align", "Align --source onto --target; target ~ q o source + t");
    align_cmd->add_option("--source", source_path, "Source cloud (PLY or XYZ)")->required();
    align_cmd->add_option("--target", target_path, "Target cloud (PLY or XYZ)")->required();
    align_cmd->add_option("--lambda-deg", lambda_deg, "DP-vMF-means angular scales in degrees")
        ->delimiter(',')
        ->capture_default_str();
    align_cmd->add_option("--lambda-x", lambda_x, "DP-means scale (length); default 0.1 x source extent");
    align_cmd->add_option("--rot-depth", rot_depth, "Rotational refinement depth (default 11)");
    align_cmd->add_option("--rot-tol-deg", rot_tol_deg, "Rotational tolerance in degrees");
    align_cmd->add_option("--trans-depth", trans_depth, "Translational refinement depth (default 10)");
    align_cmd->add_option("--trans-tol", trans_tol, "Translational tolerance (length)");
    align_cmd->add_flag("--mw", mw, "Expand rotation candidates by the 24 cube symmetries");
    align_cmd->add_option("--knn", knn, "Neighbors for normal estimation")->capture_default_str();
    align_cmd->add_option("--threads", threads, "Threads for bound evaluation")->capture_default_str();
    align_cmd->add_flag("--union-box,--paper-box", union_root_box, "Use the bounding box of both clouds as translational root");
    align_cmd->add_flag("--cone-extrema", cone_extrema,
                        "Rotational concentration ranges from the vertex cone (tighter, not always sound)");
    align_cmd->add_flag("--no-shared-incumbent", no_share,
                        "Run every translational search to full depth instead of pruning against earlier candidates");
    align_cmd->add_option("--out", out_path, "Result JSON")->required();
    align_cmd->add_option("--trace", trace_path, "Search trace CSV");
    align_cmd->add_option("--seed", seed, "Accepted for reproducibility bookkeeping; the search is deterministic");
    align_cmd->add_option("--tess-cache", tess_cache, "Binary 600-cell cache (created if missing)");
    align_cmd->add_option("--source-viewpoint", source_view, "Viewpoint for source normal orientation")
        ->expected(3)
        ->delimiter(',');
    align_cmd->add_option("--target-viewpoint", target_view, "Viewpoint for target normal orientation")
        ->expected(3)
        ->delimiter(',');

    std::string tess_out;
    auto* tess_cmd = app.add_subcommand("tessellation", "Write the 600-cell cover to a binary cache");
    tess_cmd->add_option("--out", tess_out, "Output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitParse;
    }

    try {
        if (*tess_cmd) {
            bbalign::save_tessellation(bbalign::generate_600cell(), tess_out);
            return 0;
        }

        bbalign::AlignmentConfig config;
        config.lambda_deg_list = lambda_deg;
        config.lambda_x = lambda_x;
        if (rot_depth >= 0) config.rot_depth = rot_depth;
        if (rot_tol_deg > 0.0) config.rot_tol_deg = rot_tol_deg;
        if (trans_depth >= 0) config.trans_depth = trans_depth;
        if (trans_tol > 0.0) config.trans_tol = trans_tol;
        config.mw_enabled = mw;
        config.knn_k = knn;
        config.threads = threads;
        config.union_root_box = union_root_box;
        config.cone_rot_extrema = cone_extrema;
        config.share_incumbent = !no_share;
        config.seed = seed;
        config.source_viewpoint = parse_vec3(source_view);
        config.target_viewpoint = parse_vec3(target_view);

        bbalign::Tessellation tess;
        if (!tess_cache.empty() && std::filesystem::exists(tess_cache)) {
            tess = bbalign::load_tessellation(tess_cache);
        } else {
            tess = bbalign::default_tessellation();
            if (!tess_cache.empty()) bbalign::save_tessellation(tess, tess_cache);
        }

        const auto source = bbalign::read_cloud(source_path);
        const auto target = bbalign::read_cloud(target_path);
        const auto result = bbalign::align(source, target, config, tess);
        bbalign::write_result(result, out_path);
        if (!trace_path.empty()) bbalign::write_trace(result.trace, trace_path);

        std::cout << "q_ijkr " << result.q.i << ' ' << result.q.j << ' ' << result.q.k << ' ' << result.q.r << '\n'
                  << "t " << result.t.x() << ' ' << result.t.y() << ' ' << result.t.z() << '\n'
                  << "rmse " << result.rmse << '\n';
        return 0;
    } catch (const bbalign::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const bbalign::UnsupportedFormat& e) {
        std::cerr << "unsupported format: " << e.what() << '\n';
        return kExitParse;
    } catch (const bbalign::EmptyCloud& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const bbalign::InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const bbalign::SingularMatrix& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
