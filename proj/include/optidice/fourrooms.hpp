#pragma once

#include "optidice/mdp.hpp"
#include "optidice/solver.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <set>
#include <utility>
#include <vector>

namespace optidice {

using Cell = std::pair<int, int>; // (row, col)

/// Geometry of the Four Rooms grid. Passable cells are enumerated in
/// row-major order to form the state space; one absorbing sink state is
/// appended after them.
struct GridSpec {
    int width = 0;
    int height = 0;
    std::set<Cell> walls;
    Cell start{0, 0};
    Cell goal{0, 0};

    bool is_wall(int row, int col) const { return walls.count({row, col}) > 0; }
    /// State index of a passable cell, -1 for walls.
    int state_of(int row, int col) const;
    /// Cell of a passable state (states are 0..n_passable-1).
    Cell cell_of(int state) const;
    int n_passable() const;
    int sink_state() const { return n_passable(); }
};

/// Action codes shared by the dynamics and the emitted sidecar files.
enum GridAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

/// Classic 11×11 four-room layout with four doorways; deterministic cardinal
/// moves, wall collisions stay in place, reward 1 on reaching the goal then
/// absorbing, γ = 0.95. Start top-left, goal bottom-right.
std::pair<TabularMdp, GridSpec> build_four_rooms();

/// One heatmap: per-cell scalar (NaN on walls) and per-cell argmax action
/// (-1 on walls).
struct HeatGrid {
    Eigen::MatrixXd value;
    Eigen::MatrixXi action;
};

struct IllustrativeResult {
    GridSpec grid;
    HeatGrid behavior_occupancy;  // (a) exact d^{π_D} on the true MDP
    HeatGrid empirical_occupancy; // (b) empirical d^D from the dataset
    HeatGrid correction;          // (c) w* per state (summed over actions)
    HeatGrid corrected_occupancy; // (d) normalized d^D ∘ w*
    Eigen::MatrixXd d_empirical;  // S × A
    Eigen::MatrixXd d_hat;        // S × A, normalized d^D ∘ w*
    SolveResult solve;
    TabularMdp mle;
    double alpha = 0.0;
    std::uint64_t seed = 0;
};

/// Illustrative pipeline: collect 50 episodes (max 50 steps) under
/// π_D = 0.5 π*_true + 0.5 π_rand with π_rand(s) ∼ Dir(1,1,1,1), build the
/// MLE MDP, run the exact χ² Newton solve with d^{π_D} on the MLE MDP as the
/// reference distribution, and emit the four heatmap grids.
IllustrativeResult run_illustrative(std::uint64_t seed, double alpha);

/// Writes fig1_a.csv ... fig1_d.csv (row-major cell values, walls as nan)
/// plus JSON sidecars with the argmax-action codes.
void write_illustrative(const IllustrativeResult& result, const std::filesystem::path& out_dir);

} // namespace optidice
