#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "annulus/geometry.hpp"
#include "annulus/nonlinearity.hpp"
#include "annulus/operators.hpp"
#include "annulus/radial.hpp"

namespace annulus {

/// A field satisfying the discrete cone conditions: nonnegative, and
/// nonincreasing in θ along every r-row.
struct ConeField {
    Field2D field;
};

/// True if `u` is nonnegative and nonincreasing in θ on every row, up to `slack`.
bool in_cone(const Field2D& u, double slack = 0.0);

/// Metric projection onto the cone in the quadrature-weighted Euclidean norm.
/// Each r-row is projected independently by Dykstra's alternating scheme between
/// weighted isotonic (nonincreasing) regression and clamping at zero.
ConeField project_cone(const Field2D& field, const Grid2D& grid);

/// Weighted pool-adjacent-violators: nonincreasing least-squares fit of `values`
/// with weights `weights` (zero weights allowed).
std::vector<double> isotonic_nonincreasing(std::span<const double> values, std::span<const double> weights);

/// Random nonnegative combination of sin(aπρ)cos(bθ), a = 1..4, b = 0..3,
/// projected onto the cone; ρ = (r - R0)/(R1 - R0). Deterministic in `seed`.
Field2D random_cone_field(const Grid2D& grid, std::uint64_t seed);

/// Discrete energy J_h and its exact gradient on one grid. Holds the stiffness
/// operator so repeated evaluations share the assembled matrix and factorization.
/// The grid must outlive the model.
class EnergyModel {
public:
    EnergyModel(const Grid2D& grid, NonlinearitySpec nonlin, AnnulusSpec annulus);

    const Grid2D& grid() const { return *grid_; }
    const StiffnessOperator& stiffness() const { return K_; }
    const NonlinearitySpec& nonlinearity() const { return nonlin_; }
    const AnnulusSpec& annulus() const { return annulus_; }

    /// Throws DomainError if the field does not vanish on the r-boundary rows.
    double energy(const Field2D& u) const;
    /// Coefficient gradient of J_h; boundary r-rows are zero.
    Field2D gradient(const Field2D& u) const;
    /// ∫ F(r, u) dx.
    double potential(const Field2D& u) const;
    /// ∫ f(r, t φ) φ dx.
    double nonlinear_pairing(const Field2D& phi, double t) const;
    /// ∫ ∂_s f(r, t φ) φ² dx.
    double nonlinear_curvature(const Field2D& phi, double t) const;

private:
    void check_boundary(const Field2D& u) const;
    const Grid2D* grid_;
    NonlinearitySpec nonlin_;
    AnnulusSpec annulus_;
    StiffnessOperator K_;
};

double discrete_energy(const Field2D& field, const Grid2D& grid, const NonlinearitySpec& nonlin,
                       const AnnulusSpec& annulus);
Field2D discrete_gradient(const Field2D& field, const Grid2D& grid, const NonlinearitySpec& nonlin,
                          const AnnulusSpec& annulus);

struct FiberingResult {
    double t_star = 0.0;
    double g_max = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};
    double derivative_at_t_star = 0.0;
};

/// Maximizes g(t) = J_h(t φ) over t > 0. Throws SolverError::NoSignChange if
/// g' stays positive over the whole sweep.
FiberingResult fibering_max(const Field2D& direction, const EnergyModel& model);
FiberingResult fibering_max(const ConeField& direction, const Grid2D& grid, const NonlinearitySpec& nonlin,
                            const AnnulusSpec& annulus);

/// g'(t) = J_h'(t φ)[φ].
double fiber_derivative(const Field2D& direction, const EnergyModel& model, double t);

struct PathTestResult {
    double tau = 0.0;
    double level_perturbed = 0.0;  // max_t J_h(t φ), φ = u_rad (1 + τ y)
    double level_radial = 0.0;     // J_h(u_rad)
    double margin = 0.0;           // level_radial - level_perturbed
    double t_star = 0.0;
};

/// Evaluates the perturbed fiber maximum against the radial level. τ must lie in
/// [0, 1/(N-1)) so the perturbation stays in the cone.
PathTestResult breaking_path_test(const RadialProfile& profile, double tau, const EnergyModel& model);
PathTestResult breaking_path_test(const RadialProfile& profile, double tau, const Grid2D& grid,
                                  const NonlinearitySpec& nonlin, const AnnulusSpec& annulus);

/// Quadratic fit of margin/τ² over the given τ values, extrapolated to τ → 0.
double extrapolate_margin_coefficient(const std::vector<PathTestResult>& results);

struct MountainPassOptions {
    double tol = 1e-6;              // projected-gradient norm in the stiffness metric
    int max_iterations = 4000;
    int path_points = 40;
    int redistribute_every = 10;
    double tau0 = 0.05;             // seed perturbation u_rad (1 + τ0 y)
    double armijo = 1e-4;
    double max_step = 1e3;
    std::size_t radial_nodes = 2001;
    std::uint64_t seed = 1;         // random directions in the geometry check
    int geometry_samples = 8;
};

struct MountainPassResult {
    ConeField u;
    double energy = 0.0;       // candidate level
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string stop_reason;   // "converged", "iteration_cap" or "stalled" (no step passed the line search)
    bool is_radial = false;
    std::vector<std::pair<int, double>> path_log;  // (iteration, path maximum)
    std::vector<std::pair<double, double>> path;   // last sampled path: (t along the ray, J)
    double small_sphere_inf = 0.0;
    double endpoint_energy = 0.0;
    std::string seed_kind;                 // "radial" or "bump"
    std::optional<double> radial_energy;   // J_h of the lifted radial profile, when one exists
};

/// max over r-rows of the θ-oscillation below 1e-6 ‖u‖_∞.
bool is_radial(const Field2D& u);

/// Cone-constrained mountain pass. The path from 0 to an endpoint e with
/// J_h(e) <= 0 is kept along the ray through its maximum point; each iteration
/// takes a preconditioned projected-gradient step from the maximum, re-inserts the
/// new fiber maximum and re-samples the path. Throws SolverError::GeometryViolated;
/// hitting the iteration cap returns the best point with converged = false.
MountainPassResult mountain_pass(const Grid2D& grid, const NonlinearitySpec& nonlin, const AnnulusSpec& annulus,
                                 const MountainPassOptions& opts = {});
MountainPassResult mountain_pass(const EnergyModel& model, const Field2D& seed, const MountainPassOptions& opts,
                                 std::optional<double> radial_energy = std::nullopt);

}  // namespace annulus
