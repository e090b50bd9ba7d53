#include <catch2/catch_amalgamated.hpp>
#include <cstring>

#include "cpgrl/cpg/gradcheck.hpp"

using namespace cpgrl;

namespace {

CpgTape make_tape(Rng& rng, int n, int steps, double w_hi = 0.05) {
    const CpgParams p = detail::sample_params(rng, n, w_hi);
    const CpgState s0 = detail::sample_state(rng, n, 0.01);
    auto [s, ys, tape] = rollout_with_tape(p, Modulation{}, s0, steps);
    (void)s;
    (void)ys;
    return tape;
}

}  // namespace

TEST_CASE("zero output gradients give zero parameter gradients") {
    Rng rng(1);
    const CpgTape tape = make_tape(rng, 4, 8);
    const CpgGradients g = backward(tape, Mat::Zero(8, 4));
    CHECK(g.packed().isZero(0.0));
}

TEST_CASE("taped rollout returns the same outputs as the plain rollout") {
    Rng rng(17);
    const CpgParams p = detail::sample_params(rng, 3, 0.05);
    const CpgState s0 = detail::sample_state(rng, 3, 0.01);
    auto [s_plain, ys_plain] = cpg_rollout(p, Modulation{}, s0, 6);
    auto [s_taped, ys_taped, tape] = rollout_with_tape(p, Modulation{}, s0, 6);
    REQUIRE(ys_taped.rows() == 6);
    REQUIRE(ys_taped.cols() == 3);
    CHECK((ys_taped.array() == ys_plain.array()).all());
    CHECK((ys_taped.array() == tape.outputs.array()).all());
    CHECK((s_taped.phase.array() == s_plain.phase.array()).all());
}

TEST_CASE("offset-target unroll matches the hand recurrence") {
    // For L = y^T on a single oscillator from zero state, dL/dB is zero for
    // T <= 2 and alpha_b*beta_b*alpha_B*dt^2 at T = 3.
    CpgParams p(1);
    p.omega[0] = 0.6;
    p.amp[0] = 0.7;
    p.offset[0] = 0.5;
    const Modulation mod;
    for (int T : {1, 2, 3}) {
        auto [s, ys, tape] = rollout_with_tape(p, mod, CpgState(1, 0.01), T);
        (void)s;
        (void)ys;
        Mat coeff = Mat::Zero(T, 1);
        coeff(T - 1, 0) = 1.0;
        const CpgGradients g = backward(tape, coeff);
        const double expect = T < 3 ? 0.0 : mod.alpha_b * mod.beta_b * mod.alpha_B * 0.01 * 0.01;
        CHECK(std::abs(g.offset[0] - expect) < 1e-15);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    GradcheckSpec spec;
    const GradcheckReport rep = run_gradcheck(spec);
    INFO("worst rel " << rep.worst_rel << " at n=" << rep.worst_n << " steps=" << rep.worst_steps);
    CHECK(rep.cases == 60);
    CHECK(rep.worst_rel < spec.rel_tol);

    // Widen past the default grid so the sampled-case count crosses 100.
    GradcheckSpec extra;
    extra.sizes = {3, 5};
    extra.steps = {7, 13};
    extra.seeds = 11;
    const GradcheckReport rep2 = run_gradcheck(extra);
    CHECK(rep.cases + rep2.cases >= 100);
    CHECK(rep2.worst_rel < spec.rel_tol);
}

TEST_CASE("direct recurrences equal the adjoint on decoupled networks") {
    double worst = 0.0;
    for (uint64_t seed = 0; seed < 50; ++seed)
        worst = std::max(worst, direct_agreement_case(7000 + seed));
    CHECK(worst < 1e-10);
}

TEST_CASE("direct partial of amplitude ignores couplings") {
    Rng rng(23);
    const CpgState s0 = detail::sample_state(rng, 3, 0.01);
    CpgParams coupled = detail::sample_params(rng, 3, 0.05);
    CpgParams decoupled = coupled;
    decoupled.w.setZero();
    auto [s1, y1, tape_c] = rollout_with_tape(coupled, Modulation{}, s0, 12);
    auto [s2, y2, tape_d] = rollout_with_tape(decoupled, Modulation{}, s0, 12);
    (void)s1; (void)y1; (void)s2; (void)y2;
    for (int t : {0, 3, 12}) {
        const auto dc = direct_path_gradients(tape_c, 1, t);
        const auto dd = direct_path_gradients(tape_d, 1, t);
        CHECK(dc.damp_dA == dd.damp_dA);
        CHECK(dc.doffset_dB == dd.doffset_dB);
    }
}

TEST_CASE("direct offset trajectory matches the adjoint diagonal when decoupled") {
    Rng rng(29);
    CpgParams p = detail::sample_params(rng, 2, 0.5);
    p.w.setZero();
    const CpgState s0 = detail::sample_state(rng, 2, 0.01);
    auto [s, ys, tape] = rollout_with_tape(p, Modulation{}, s0, 20);
    (void)s;
    (void)ys;
    for (int t = 1; t <= 20; ++t) {
        Mat coeff = Mat::Zero(20, 2);
        coeff(t - 1, 0) = 1.0;
        const CpgGradients g = backward(tape, coeff);
        const auto d = direct_path_gradients(tape, 0, t);
        CHECK(std::abs(g.offset[0] - d.doffset_dB) < 1e-12);
    }
}

TEST_CASE("direct partials at step zero are zero") {
    Rng rng(31);
    const CpgTape tape = make_tape(rng, 3, 5);
    const auto d = direct_path_gradients(tape, 2, 0);
    CHECK(d.dphi_dw.isZero(0.0));
    CHECK(d.dphi_dphi_bias.isZero(0.0));
    CHECK(d.dphi_domega == 0.0);
    CHECK(d.damp_dA == 0.0);
    CHECK(d.doffset_dB == 0.0);
}

TEST_CASE("backward is linear in the output gradients") {
    Rng rng(37);
    const CpgTape tape = make_tape(rng, 4, 12);
    Mat g1(12, 4), g2(12, 4);
    for (int t = 0; t < 12; ++t)
        for (int i = 0; i < 4; ++i) {
            g1(t, i) = uniform(rng, -1.0, 1.0);
            g2(t, i) = uniform(rng, -1.0, 1.0);
        }
    const Vec a = backward(tape, g1).packed();
    const Vec b = backward(tape, g2).packed();
    const Vec ab = backward(tape, g1 + g2).packed();
    CHECK((ab - a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backward is deterministic") {
    Rng rng(41);
    const CpgTape tape = make_tape(rng, 5, 9);
    Mat coeff(9, 5);
    for (int t = 0; t < 9; ++t)
        for (int i = 0; i < 5; ++i) coeff(t, i) = uniform(rng, -1.0, 1.0);
    const Vec a = backward(tape, coeff).packed();
    const Vec b = backward(tape, coeff).packed();
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("backward rejects mismatched shapes") {
    Rng rng(43);
    const CpgTape tape = make_tape(rng, 3, 6);
    CHECK_THROWS_AS(backward(tape, Mat::Zero(5, 3)), structural_error);
    CHECK_THROWS_AS(backward(tape, Mat::Zero(6, 2)), structural_error);
    CHECK_THROWS_AS(direct_path_gradients(tape, 3, 2), structural_error);
    CHECK_THROWS_AS(direct_path_gradients(tape, 0, 7), structural_error);
}
