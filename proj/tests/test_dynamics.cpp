#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "wiresim/detail/banded.hpp"
#include "wiresim/dynamics.hpp"

using namespace wiresim;

namespace {

RodState straight_state(int n, double L = 2.0, const Vec3& dir = Vec3(1, 0, 0)) {
    return RodState::make(Centerline::straight(Vec3::Zero(), dir, L, n),
                          dir.isApprox(Vec3(1, 0, 0)) ? Vec3(0, 0, 1) : Vec3(1, 0, 0));
}

BoundaryCondition anchor_bc(const RodState& s) {
    BoundaryCondition bc;
    bc.clamps.push_back({0, s.centerline.nodes[0], Vec3::Zero()});
    return bc;
}

}  // namespace

TEST_CASE("banded cholesky solves a random SPD system") {
    const int n = 40, hb = 5;
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    detail::BandedSpd band(n, hb);
    for (int j = 0; j < n; ++j)
        for (int i = j; i <= std::min(n - 1, j + hb); ++i) {
            const double v = (i == j) ? 8.0 + u(rng) : u(rng);
            dense(i, j) = dense(j, i) = v;
            band.at(i, j) = v;
        }
    Eigen::VectorXd b = Eigen::VectorXd::Random(n);
    std::vector<double> rhs(b.data(), b.data() + n);
    band.factor();
    band.solve(rhs);
    const Eigen::VectorXd x = dense.ldlt().solve(b);
    for (int i = 0; i < n; ++i) CHECK(rhs[i] == doctest::Approx(x(i)).epsilon(1e-9));
}

TEST_CASE("banded cholesky dof constraint pins the solution") {
    const int n = 12, hb = 3;
    detail::BandedSpd band(n, hb);
    for (int j = 0; j < n; ++j) {
        band.at(j, j) = 4.0;
        if (j + 1 < n) band.at(j + 1, j) = -1.0;
    }
    std::vector<double> rhs(n, 1.0);
    band.constrain_dof(5, 2.5, rhs);
    band.factor();
    band.solve(rhs);
    CHECK(rhs[5] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("equilibrium state is unchanged by a step") {
    const int n = 20;
    RodState s = straight_state(n);
    const RodParams p = RodParams::uniform(1.0, 1.0, 0.5, n);
    SceneConfig scene;  // zero gravity, no ground
    const RodState s2 = step(s, p, BoundaryCondition{}, scene, 0.002);
    for (int i = 0; i <= n; ++i) {
        CHECK((s2.centerline.nodes[i] - s.centerline.nodes[i]).norm() < 1e-12);
        CHECK(s2.velocities[i].norm() < 1e-12);
    }
    CHECK(s2.time == doctest::Approx(0.002));
}

TEST_CASE("edge lengths stay within 1e-8 of rest through dynamic steps") {
    const int n = 30;
    RodState s = straight_state(n);
    const RodParams p = RodParams::uniform(1.0, 1.0, 2.0, n, 0.5);
    SceneConfig scene;
    scene.gravity = Vec3(0, 0, -9.81);
    const BoundaryCondition bc = anchor_bc(s);
    for (int k = 0; k < 500; ++k) {
        s = step(s, p, bc, scene, 0.002);
        CHECK(max_edge_violation(s) <= 1e-8);
    }
    CHECK(s.centerline.nodes[n].z() < -0.5);  // it actually fell
}

TEST_CASE("frame orthonormality is preserved through dynamic steps") {
    const int n = 25;
    RodState s = straight_state(n);
    const RodParams p = RodParams::uniform(1.0, 1.0, 2.0, n, 0.5);
    SceneConfig scene;
    scene.gravity = Vec3(0, 0, -9.81);
    const BoundaryCondition bc = anchor_bc(s);
    for (int k = 0; k < 300; ++k) s = step(s, p, bc, scene, 0.002);
    for (int i = 0; i < s.frames.num_edges(); ++i) {
        CHECK(std::abs(s.frames.tangents[i].dot(s.frames.reference_dirs[i])) < 1e-10);
        CHECK(std::abs(s.frames.reference_dirs[i].norm() - 1.0) < 1e-10);
    }
}

TEST_CASE("damping scales velocities as exp(-c dt) and never adds energy") {
    const int n = 10;
    RodState s = straight_state(n);
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    for (Vec3& v : s.velocities) v = Vec3(u(rng), u(rng), u(rng));

    RodParams p = RodParams::uniform(1.0, 1.0, 0.5, n, 0.0);
    RodState d0 = damp_velocities(s, p, 0.01);
    for (int i = 0; i <= n; ++i) CHECK(d0.velocities[i].isApprox(s.velocities[i]));

    p.damping = std::log(2.0) / 0.01;
    RodState d1 = damp_velocities(s, p, 0.01);
    for (int i = 0; i <= n; ++i)
        CHECK(d1.velocities[i].isApprox(0.5 * s.velocities[i], 1e-12));
    CHECK(kinetic_energy(d1, p) <= kinetic_energy(s, p));
}

TEST_CASE("projection leaves a feasible state untouched") {
    const int n = 12;
    const RodState s = straight_state(n);
    const RodState q = project_inextensibility(s);
    for (int i = 0; i <= n; ++i)
        CHECK(q.centerline.nodes[i] == s.centerline.nodes[i]);
}

TEST_CASE("projection restores a displaced middle node between clamped ends") {
    RodState s;
    s.centerline.nodes = {Vec3(0, 0, 0), Vec3(1, 0.1418, 0), Vec3(2, 0, 0)};
    s.centerline.rest_lengths = {1.0, 1.0};
    s.velocities.assign(3, Vec3::Zero());
    s.frames = init_reference_frames(
        Centerline{{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)}, {1.0, 1.0}, false},
        Vec3(0, 0, 1));
    s.material.thetas.assign(2, 0.0);

    const std::vector<bool> clamped = {true, false, true};
    // The feasible set here is the straight line through the clamps, so the
    // constraints have a double root; Gauss-Seidel stalls on it while the
    // Newton iteration lands inside the default budget.
    const RodState q = project_inextensibility(s, 1e-8, 50, clamped, 0.0,
                                               ProjectionMethod::newton,
                                               {1.0, 1.0, 1.0});
    CHECK(q.centerline.nodes[0] == s.centerline.nodes[0]);
    CHECK(q.centerline.nodes[2] == s.centerline.nodes[2]);
    CHECK(max_edge_violation(q) <= 1e-8);
    // 1D Newton on C(y) = sqrt(1+y^2) - 1 drives y to zero.
    CHECK(std::abs(q.centerline.nodes[1].y()) < 2e-4);
}

TEST_CASE("projection conserves momentum of an unclamped rod") {
    const int n = 14;
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    RodState s = straight_state(n);
    for (Vec3& x : s.centerline.nodes) x += Vec3(u(rng), u(rng), u(rng));
    std::vector<double> masses;
    for (int i = 0; i <= n; ++i) masses.push_back(0.02 + 0.01 * (i % 3));
    std::mt19937 rng2(9);
    for (Vec3& v : s.velocities) v = Vec3(u(rng2), u(rng2), u(rng2));

    const double dt = 0.002;
    Vec3 p_before = Vec3::Zero();
    for (int i = 0; i <= n; ++i) p_before += masses[i] * s.velocities[i];

    for (ProjectionMethod method :
         {ProjectionMethod::newton, ProjectionMethod::gauss_seidel}) {
        const RodState q =
            project_inextensibility(s, 1e-8, 200, {}, dt, method, masses);
        Vec3 p_after = Vec3::Zero();
        for (int i = 0; i <= n; ++i) p_after += masses[i] * q.velocities[i];
        CHECK((p_after - p_before).norm() < 1e-9 * (p_before.norm() + 1.0));
        CHECK(max_edge_violation(q) <= 1e-8);
    }
}

TEST_CASE("clamped rod with end twist relaxes to the uniform-twist energy") {
    const int n = 200;
    const double L = 2.0, beta = 0.789, theta_end = 4 * M_PI;
    RodState s = straight_state(n, L);
    const RodParams p = RodParams::uniform(1.345, beta, 1.0, n, 5.0);
    SceneConfig scene;
    BoundaryCondition bc;
    bc.clamps.push_back({0, s.centerline.nodes[0], Vec3::Zero()});
    bc.clamps.push_back({n, s.centerline.nodes[n], Vec3::Zero()});
    bc.theta_end = theta_end;

    s = step(s, p, bc, scene, 0.002);  // imposes the theta clamps
    auto [settled, converged] = relax(s, p, bc, scene, 4000, 1e-12);
    CHECK(converged);
    const double e = twist_energy(settled.centerline, settled.frames, settled.material, p);
    CHECK(e == doctest::Approx(beta * theta_end * theta_end / (2 * L)).epsilon(0.01));
}

TEST_CASE("contact force: node above ground and outside boxes feels nothing") {
    const int n = 4;
    RodState s = straight_state(n);
    for (Vec3& x : s.centerline.nodes) x.z() = 1.0;
    SceneConfig scene;
    scene.ground_height = 0.0;
    scene.obstacles.push_back({Vec3(5, 0, 0.15), Vec3(0.05, 0.2, 0.15)});
    for (const Vec3& f : contact_forces(s, scene)) CHECK(f.norm() == doctest::Approx(0));
}

TEST_CASE("contact force: 1 mm ground penetration at k = 1e4 gives 10 N") {
    RodState s = straight_state(4);
    for (Vec3& x : s.centerline.nodes) x.z() = -0.001;
    SceneConfig scene;
    scene.ground_height = 0.0;
    scene.contact_stiffness = 1e4;
    scene.contact_friction = 0.0;
    const auto f = contact_forces(s, scene);
    CHECK(f[2].isApprox(Vec3(0, 0, 10.0), 1e-12));
}

TEST_CASE("contact force is continuous at zero penetration") {
    RodState s = straight_state(4);
    SceneConfig scene;
    scene.ground_height = 0.0;
    for (double z : {1e-9, -1e-9}) {
        for (Vec3& x : s.centerline.nodes) x.z() = z;
        const auto f = contact_forces(s, scene);
        CHECK(f[1].norm() < 1e-4);
    }
}

TEST_CASE("box contact pushes out along the least-penetrated axis") {
    RodState s = straight_state(4);
    SceneConfig scene;
    scene.obstacles.push_back({Vec3(0.5, 0, 0.15), Vec3(0.05, 0.2, 0.15)});
    scene.contact_friction = 0.0;
    // Node just inside the +x face.
    s.centerline.nodes[1] = Vec3(0.549, 0.0, 0.1);
    const auto f = contact_forces(s, scene);
    CHECK(f[1].x() > 0);
    CHECK(f[1].y() == doctest::Approx(0));
}

TEST_CASE("relax returns right away for a settled state") {
    const int n = 10;
    RodState s = straight_state(n);
    const RodParams p = RodParams::uniform(1.0, 1.0, 0.5, n);
    auto [out, converged] = relax(s, p, BoundaryCondition{}, SceneConfig{}, 100, 1e-10);
    CHECK(converged);
    CHECK(out.step_count <= 1);
}

TEST_CASE("hanging rod settles with non-increasing total energy") {
    const int n = 24;
    RodState s = straight_state(n);
    const RodParams p = RodParams::uniform(1.0, 1.0, 2.0, n, 4.0);
    SceneConfig scene;
    scene.gravity = Vec3(0, 0, -9.81);
    const BoundaryCondition bc = anchor_bc(s);

    const double e0 = relaxed_energy(s.centerline, s.frames, s.material, p) +
                      gravitational_energy(s, p, scene) + kinetic_energy(s, p);
    auto [settled, converged] = relax(s, p, bc, scene, 30000, 1e-10);
    CHECK(converged);
    const double e1 = relaxed_energy(settled.centerline, settled.frames,
                                     settled.material, p) +
                      gravitational_energy(settled, p, scene) +
                      kinetic_energy(settled, p);
    CHECK(e1 <= e0);
    // Settled shape sags below the anchor.
    CHECK(settled.centerline.nodes[n / 2].z() < 0);
}

TEST_CASE("damped free oscillation never gains mechanical energy") {
    const int n = 16;
    RodState s = straight_state(n);
    // Pluck it.
    for (int i = 0; i <= n; ++i)
        s.centerline.nodes[i].y() += 0.01 * std::sin(M_PI * i / n);
    s = project_inextensibility(s, 1e-10, 200);
    const RodParams p = RodParams::uniform(1.0, 1.0, 1.0, n, 0.8);
    SceneConfig scene;  // no gravity, no contact, no clamps

    auto energy = [&](const RodState& st) {
        return relaxed_energy(st.centerline, st.frames, st.material, p) +
               kinetic_energy(st, p);
    };
    RodState cur = s;
    double prev = energy(cur);
    for (int k = 0; k < 400; ++k) {
        cur = step(cur, p, BoundaryCondition{}, scene, 0.002);
        if (k % 40 == 0) {
            const double e = energy(cur);
            CHECK(e <= prev * (1 + 1e-9));
            prev = e;
        }
    }
}

TEST_CASE("identical inputs give bit-identical trajectories") {
    const int n = 18;
    auto run = [&] {
        RodState s = straight_state(n);
        const RodParams p = RodParams::uniform(1.2, 0.9, 1.5, n, 0.3);
        SceneConfig scene;
        scene.gravity = Vec3(0, 0, -9.81);
        const BoundaryCondition bc = anchor_bc(s);
        for (int k = 0; k < 200; ++k) s = step(s, p, bc, scene, 0.002);
        return s;
    };
    const RodState a = run(), b = run();
    for (int i = 0; i <= n; ++i) {
        CHECK(a.centerline.nodes[i] == b.centerline.nodes[i]);
        CHECK(a.velocities[i] == b.velocities[i]);
    }
}

TEST_CASE("relaxed shape does not depend on the Bishop seed direction") {
    const int n = 20;
    const RodParams p = RodParams::uniform(1.0, 1.0, 2.0, n, 4.0);
    SceneConfig scene;
    scene.gravity = Vec3(0, 0, -9.81);

    auto settle = [&](const Vec3& u0) {
        const Centerline c = Centerline::straight(Vec3::Zero(), Vec3(1, 0, 0), 2.0, n);
        RodState s = RodState::make(c, u0);
        BoundaryCondition bc;
        bc.clamps.push_back({0, c.nodes[0], Vec3::Zero()});
        bc.theta_end = 1.0;  // some twist so frames matter
        auto [out, ok] = relax(s, p, bc, scene, 30000, 1e-10);
        REQUIRE(ok);
        return out;
    };
    const RodState a = settle(Vec3(0, 1, 0));
    const RodState b = settle(Vec3(0, std::sqrt(0.5), std::sqrt(0.5)));
    for (int i = 0; i <= n; ++i)
        CHECK((a.centerline.nodes[i] - b.centerline.nodes[i]).norm() < 1e-6);
}

TEST_CASE("divergence is reported as a diverged error naming the step") {
    const int n = 8;
    RodState s = straight_state(n);
    s.velocities[3] = Vec3(2e4, 0, 0);  // beyond the sanity limit
    const RodParams p = RodParams::uniform(1.0, 1.0, 0.5, n);
    try {
        step(s, p, BoundaryCondition{}, SceneConfig{}, 0.002);
        FAIL("expected DivergedError");
    } catch (const DivergedError& e) {
        CHECK(e.step == 0);
    }
}

TEST_CASE("default dt stays stable across the stiffness envelope") {
    // 2 s swing of the default wire at the stiff corner of the envelope.
    for (const int n : {30, 60}) {
        RodState s = straight_state(n);
        const RodParams p = RodParams::uniform(2.0, 2.0, 2.0, n, 0.5);
        SceneConfig scene;
        scene.gravity = Vec3(0, 0, -9.81);
        const BoundaryCondition bc = anchor_bc(s);
        RodState cur = s;
        for (int k = 0; k < 1000; ++k) cur = step(cur, p, bc, scene, 0.002);
        CHECK(max_edge_violation(cur) <= 1e-8);
    }
}
