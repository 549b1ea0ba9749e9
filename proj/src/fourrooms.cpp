#include "optidice/fourrooms.hpp"

#include "optidice/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace optidice {

namespace {

constexpr int kSide = 11;
constexpr double kDiscount = 0.95;
constexpr int kNumActions = 4;
constexpr int kEpisodes = 50;
constexpr int kMaxEpisodeSteps = 50;

// '#' marks walls; four doorways connect the rooms (104 passable cells).
constexpr const char* kLayout[kSide] = {
    ".....#.....",
    ".....#.....",
    "...........",
    ".....#.....",
    ".....#.....",
    "#.####.....",
    ".....###.##",
    ".....#.....",
    ".....#.....",
    "...........",
    ".....#.....",
};

constexpr int kRowDelta[kNumActions] = {-1, 1, 0, 0};
constexpr int kColDelta[kNumActions] = {0, 0, -1, 1};

/// Scalar-per-state table -> height×width heatmap with NaN walls.
HeatGrid make_grid(const GridSpec& grid, const Eigen::MatrixXd& table) {
    HeatGrid out;
    out.value = Eigen::MatrixXd::Constant(grid.height, grid.width,
                                          std::numeric_limits<double>::quiet_NaN());
    out.action = Eigen::MatrixXi::Constant(grid.height, grid.width, -1);
    for (int r = 0; r < grid.height; ++r) {
        for (int c = 0; c < grid.width; ++c) {
            const int s = grid.state_of(r, c);
            if (s < 0) continue;
            out.value(r, c) = table.row(s).sum();
            int best = 0;
            for (int a = 1; a < table.cols(); ++a) {
                if (table(s, a) > table(s, best)) best = a;
            }
            out.action(r, c) = best;
        }
    }
    return out;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_heatgrid(const HeatGrid& grid, double alpha, std::uint64_t seed,
                    const std::filesystem::path& csv_path) {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    for (Eigen::Index r = 0; r < grid.value.rows(); ++r) {
        for (Eigen::Index c = 0; c < grid.value.cols(); ++c) {
            if (c > 0) csv << ',';
            csv << (std::isnan(grid.value(r, c)) ? "nan" : format_double(grid.value(r, c)));
        }
        csv << '\n';
    }
    nlohmann::json actions = nlohmann::json::array();
    for (Eigen::Index r = 0; r < grid.action.rows(); ++r) {
        std::vector<int> row(grid.action.cols());
        for (Eigen::Index c = 0; c < grid.action.cols(); ++c) row[c] = grid.action(r, c);
        actions.push_back(row);
    }
    nlohmann::json sidecar{
        {"alpha", alpha},
        {"seed", seed},
        {"action_codes", {{"0", "up"}, {"1", "down"}, {"2", "left"}, {"3", "right"}}},
        {"actions", std::move(actions)}};
    std::filesystem::path json_path = csv_path;
    json_path.replace_extension(".json");
    std::ofstream sidecar_out(json_path, std::ios::binary);
    if (!sidecar_out) throw std::runtime_error("cannot write " + json_path.string());
    sidecar_out << sidecar.dump(2) << '\n';
}

} // namespace

int GridSpec::state_of(int row, int col) const {
    if (row < 0 || row >= height || col < 0 || col >= width || is_wall(row, col)) return -1;
    int index = 0;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            if (is_wall(r, c)) continue;
            if (r == row && c == col) return index;
            ++index;
        }
    }
    return -1;
}

Cell GridSpec::cell_of(int state) const {
    int index = 0;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            if (is_wall(r, c)) continue;
            if (index == state) return {r, c};
            ++index;
        }
    }
    throw std::out_of_range("GridSpec::cell_of: not a passable state");
}

int GridSpec::n_passable() const { return height * width - static_cast<int>(walls.size()); }

std::pair<TabularMdp, GridSpec> build_four_rooms() {
    GridSpec grid;
    grid.width = kSide;
    grid.height = kSide;
    for (int r = 0; r < kSide; ++r) {
        for (int c = 0; c < kSide; ++c) {
            if (kLayout[r][c] == '#') grid.walls.insert({r, c});
        }
    }
    grid.start = {0, 0};
    grid.goal = {kSide - 1, kSide - 1};

    const int n_cells = grid.n_passable();
    const int S = n_cells + 1; // + absorbing sink
    const int sink = grid.sink_state();
    const int goal_state = grid.state_of(grid.goal.first, grid.goal.second);
    const int start_state = grid.state_of(grid.start.first, grid.start.second);

    Eigen::MatrixXd transition =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S) * kNumActions, S);
    Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(S, kNumActions);
    for (int s = 0; s < n_cells; ++s) {
        const auto [r, c] = grid.cell_of(s);
        for (int a = 0; a < kNumActions; ++a) {
            const int row_index = s * kNumActions + a;
            if (s == goal_state) {
                transition(row_index, sink) = 1.0;
                reward(s, a) = 1.0;
                continue;
            }
            const int target = grid.state_of(r + kRowDelta[a], c + kColDelta[a]);
            transition(row_index, target >= 0 ? target : s) = 1.0;
        }
    }
    for (int a = 0; a < kNumActions; ++a) {
        transition(static_cast<Eigen::Index>(sink) * kNumActions + a, sink) = 1.0;
    }
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(S);
    p0(start_state) = 1.0;
    return {TabularMdp(S, kNumActions, std::move(transition), std::move(reward), std::move(p0),
                       kDiscount),
            grid};
}

IllustrativeResult run_illustrative(std::uint64_t seed, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("run_illustrative: alpha must be positive");
    auto [mdp, grid] = build_four_rooms();
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    const int sink = grid.sink_state();

    const auto [opt_values, pi_star] = solve_optimal(mdp);

    // π_D = 0.5 π*_true + 0.5 π_rand with Dirichlet(1,1,1,1) rows.
    Rng rng(derive_seed(seed, {0xF0}));
    Eigen::MatrixXd random_rows(S, A);
    for (int s = 0; s < S; ++s) {
        double total = 0.0;
        for (int a = 0; a < A; ++a) {
            random_rows(s, a) = rng.exponential();
            total += random_rows(s, a);
        }
        random_rows.row(s) /= total;
    }
    const Policy pi_d(0.5 * pi_star.probs + 0.5 * random_rows);

    const StationaryDistribution d_behavior = stationary_distribution(mdp, pi_d);
    const Dataset dataset = sample_trajectories(mdp, pi_d, kEpisodes, kMaxEpisodeSteps, {sink},
                                                derive_seed(seed, {0xF1}));
    const StationaryDistribution d_emp = empirical_distribution(dataset);
    TabularMdp mle = mle_mdp(dataset, mdp);
    const StationaryDistribution d_ref = stationary_distribution(mle, pi_d);

    SolverConfig config = SolverConfig::newton_defaults();
    config.alpha = alpha;
    config.seed = seed;
    SolveResult solve = solve_newton_chi2(mle, d_ref, config);

    Eigen::MatrixXd d_hat = d_emp.d.cwiseProduct(solve.w);
    const double mass = d_hat.sum();
    if (mass > 0.0) d_hat /= mass;

    // Displayed occupancies are normalized over the grid cells (the sink is
    // not drawn).
    Eigen::MatrixXd behavior_cells = d_behavior.d.topRows(sink);
    behavior_cells /= behavior_cells.sum();

    IllustrativeResult result{
        .grid = grid,
        .behavior_occupancy = make_grid(grid, behavior_cells),
        .empirical_occupancy = make_grid(grid, d_emp.d),
        .correction = make_grid(grid, solve.w),
        .corrected_occupancy = make_grid(grid, d_hat),
        .d_empirical = d_emp.d,
        .d_hat = d_hat,
        .solve = std::move(solve),
        .mle = std::move(mle),
        .alpha = alpha,
        .seed = seed,
    };
    return result;
}

void write_illustrative(const IllustrativeResult& result, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_heatgrid(result.behavior_occupancy, result.alpha, result.seed, out_dir / "fig1_a.csv");
    write_heatgrid(result.empirical_occupancy, result.alpha, result.seed, out_dir / "fig1_b.csv");
    write_heatgrid(result.correction, result.alpha, result.seed, out_dir / "fig1_c.csv");
    write_heatgrid(result.corrected_occupancy, result.alpha, result.seed, out_dir / "fig1_d.csv");
}

} // namespace optidice
