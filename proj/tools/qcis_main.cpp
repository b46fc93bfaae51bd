// qcis: exact and numeric toolkit for commuting differential operators --
// Weierstrass series, commutant search, spectral curves, Hermite/Bethe
// eigenfunctions, Calogero-Moser integrals and monodromy scans.
//
// One JSON document per invocation on stdout, human summary on stderr.
// Exit codes: 0 success (verdicts included), 2 verification failure
// (a residual above its tolerance), 1 usage error.

#include "qcis/cm.hpp"
#include "qcis/commutant.hpp"
#include "qcis/expr.hpp"
#include "qcis/json_io.hpp"
#include "qcis/lame.hpp"
#include "qcis/monodromy.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace qcis;

int default_trunc()
{
    if (const char* env = std::getenv("QCIS_TRUNC")) {
        int t = std::atoi(env);
        if (t > 0)
            return t;
    }
    return kDefaultTrunc;
}

Json make_doc(const std::string& command)
{
    Json doc;
    doc["schema"] = "qcis-lab/1";
    doc["command"] = command;
    doc["params"] = Json::object();
    return doc;
}

int emit(const Json& doc, const std::string& summary, int code = 0)
{
    std::cout << doc.dump(2) << "\n";
    std::cerr << summary << "\n";
    return code;
}

Complex make_complex(const std::vector<double>& v) { return {v[0], v.size() > 1 ? v[1] : 0.0}; }

Lattice make_lattice(const std::vector<double>& w1, const std::vector<double>& w2)
{
    return Lattice(make_complex(w1), make_complex(w2));
}

/// The square lattice rescaled so its invariants are exactly (4, 0); the
/// default evaluation lattice for exact-vs-numeric cross-checks.
Lattice flat_square_lattice()
{
    Lattice unit(Complex(1, 0), Complex(0, 1));
    double t = std::pow(std::real(unit.g2()) / 4.0, 0.25);
    return Lattice(Complex(t, 0), Complex(0, t));
}

Json cm_operator_json(const CMOperator& op)
{
    Json terms = Json::array();
    for (const auto& [key, c] : op.terms()) {
        Json factors = Json::array();
        for (const auto& [pq, exps] : key.second.factors)
            factors.push_back(Json::array({pq.first, pq.second, exps.first, exps.second}));
        terms.push_back(Json{{"coeff", json_rational(c)},
                             {"dexp", key.first},
                             {"factors", factors}});
    }
    return Json{{"n", op.n()}, {"order", op.order()}, {"terms", terms},
                {"text", to_string(op)}};
}

Json matrix_json(const Eigen::Matrix2cd& m)
{
    // row-major [re, im] pairs
    Json rows = Json::array();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            rows.push_back(json_complex(m(i, j)));
    return rows;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qcis: exact/numeric toolkit for quantum completely integrable systems"};
    app.require_subcommand(1);
    int exit_code = 0;

    // ---------------------------------------------------------------- wp-series
    {
        auto* cmd = app.add_subcommand("wp-series", "exact Laurent expansion of wp");
        auto g2 = std::make_shared<std::string>("4");
        auto g3 = std::make_shared<std::string>("1");
        auto trunc = std::make_shared<int>(default_trunc());
        cmd->add_option("--g2", *g2, "g2 as p/q");
        cmd->add_option("--g3", *g3, "g3 as p/q");
        cmd->add_option("--trunc", *trunc, "truncation order");
        cmd->callback([=, &exit_code] {
            EllipticInvariants inv(parse_rational(*g2), parse_rational(*g3));
            auto series = wp_series(inv, *trunc);
            Json doc = make_doc("wp-series");
            doc["params"] = {{"g2", *g2}, {"g3", *g3}, {"trunc", *trunc}};
            doc["series"] = json_series(series);
            doc["text"] = to_string(series);
            exit_code = emit(doc, "wp-series: " + to_string(series));
        });
    }

    // ------------------------------------------------------- lattice-invariants
    {
        auto* cmd = app.add_subcommand("lattice-invariants", "g2, g3 from periods");
        auto w1 = std::make_shared<std::vector<double>>();
        auto w2 = std::make_shared<std::vector<double>>();
        cmd->add_option("--omega1", *w1, "period omega1 as re im")->expected(2)->required();
        cmd->add_option("--omega2", *w2, "period omega2 as re im")->expected(2)->required();
        cmd->callback([=, &exit_code] {
            Lattice lat = make_lattice(*w1, *w2);
            Json doc = make_doc("lattice-invariants");
            doc["params"] = {{"omega1", json_complex(make_complex(*w1))},
                             {"omega2", json_complex(make_complex(*w2))}};
            doc["g2"] = json_complex(lat.g2());
            doc["g3"] = json_complex(lat.g3());
            exit_code = emit(doc, "lattice-invariants: g2 = (" +
                                      std::to_string(std::real(lat.g2())) + ", " +
                                      std::to_string(std::imag(lat.g2())) + ")");
        });
    }

    // ------------------------------------------------------------------- op ...
    {
        auto* op = app.add_subcommand("op", "operator algebra on expressions");
        op->require_subcommand(1);
        auto m = std::make_shared<std::string>();
        auto g2 = std::make_shared<std::string>("4");
        auto g3 = std::make_shared<std::string>("1");
        auto trunc = std::make_shared<int>(default_trunc());
        auto add_common = [&](CLI::App* sub) {
            sub->add_option("--m", *m, "binding for the parameter m (p/q)");
            sub->add_option("--g2", *g2, "binding for g2 (p/q)");
            sub->add_option("--g3", *g3, "binding for g3 (p/q)");
            sub->add_option("--trunc", *trunc, "formal-disc truncation");
        };
        auto bindings = [=]() {
            ParamBindings b;
            if (!m->empty())
                b.m = parse_rational(*m);
            b.g2 = parse_rational(*g2);
            b.g3 = parse_rational(*g3);
            return b;
        };
        auto echo_params = [=](Json& doc) {
            doc["params"]["g2"] = *g2;
            doc["params"]["g3"] = *g3;
            doc["params"]["trunc"] = *trunc;
            if (!m->empty())
                doc["params"]["m"] = *m;
        };

        auto* eval = op->add_subcommand("eval", "apply an operator to a series in u");
        auto eval_op = std::make_shared<std::string>();
        auto eval_psi = std::make_shared<std::string>();
        eval->add_option("--op", *eval_op, "operator over u, D")->required();
        eval->add_option("--psi", *eval_psi, "series expression in u")->required();
        add_common(eval);
        eval->callback([=, &exit_code] {
            auto op_tree = parse_operator(*eval_op, bindings());
            auto psi_tree = parse_operator(*eval_psi, bindings());
            auto lowered = lower_formal(op_tree, *trunc);
            auto psi_op = lower_formal(psi_tree, *trunc);
            if (psi_op.order() > 0)
                throw std::invalid_argument("--psi must not contain D");
            LaurentSeries<Rational> psi =
                psi_op.is_zero() ? LaurentSeries<Rational>::zero(*trunc) : psi_op.coeff(0);
            auto image = qcis::apply(lowered, psi);
            Json doc = make_doc("op eval");
            echo_params(doc);
            doc["params"]["op"] = *eval_op;
            doc["params"]["psi"] = *eval_psi;
            doc["series"] = json_series(image);
            doc["text"] = to_string(image);
            exit_code = emit(doc, "op eval: " + to_string(image));
        });

        for (const std::string which : {"commutator", "adjoint"}) {
            bool is_comm = which == "commutator";
            auto* sub = op->add_subcommand(which, is_comm ? "commutator of two operators"
                                                          : "formal adjoint of an operator");
            auto a_src = std::make_shared<std::string>();
            auto b_src = std::make_shared<std::string>();
            sub->add_option("--a", *a_src, "operator expression")->required();
            if (is_comm)
                sub->add_option("--b", *b_src, "operator expression")->required();
            add_common(sub);
            sub->callback([=, &exit_code] {
                auto a_tree = parse_operator(*a_src, bindings());
                ExprPtr b_tree = is_comm ? parse_operator(*b_src, bindings()) : nullptr;
                bool formal = uses_symbol(a_tree, "u") || (b_tree && uses_symbol(b_tree, "u"));
                Json doc = make_doc("op " + which);
                echo_params(doc);
                doc["params"]["a"] = *a_src;
                if (is_comm)
                    doc["params"]["b"] = *b_src;
                std::string text;
                bool zero = false;
                if (formal) {
                    auto a_low = lower_formal(a_tree, *trunc);
                    auto result = is_comm ? commutator(a_low, lower_formal(b_tree, *trunc))
                                          : adjoint(a_low);
                    text = to_string(result);
                    zero = result.is_zero();
                } else {
                    EllipticRing ring{
                        EllipticInvariants(parse_rational(*g2), parse_rational(*g3))};
                    auto a_low = lower_elliptic(a_tree, ring);
                    auto result = is_comm ? commutator(a_low, lower_elliptic(b_tree, ring))
                                          : adjoint(a_low);
                    text = grammar_string(result);
                    zero = result.is_zero();
                }
                doc["result"] = text;
                doc["zero"] = zero;
                exit_code = emit(doc, "op " + which + ": " + text);
            });
        }
    }

    // --------------------------------------------------------------- commutant
    {
        auto* cmd = app.add_subcommand("commutant", "centralizer search");
        cmd->require_subcommand(1);
        auto* find = cmd->add_subcommand("find", "search for Q of given odd order");
        auto m = std::make_shared<std::string>("1");
        auto order = std::make_shared<int>(3);
        auto g2 = std::make_shared<std::string>("4");
        auto g3 = std::make_shared<std::string>("1");
        auto wbound = std::make_shared<int>(-1);
        find->add_option("--m", *m, "Lame parameter (p/q)");
        find->add_option("--order", *order, "target odd order");
        find->add_option("--g2", *g2, "curve invariant g2");
        find->add_option("--g3", *g3, "curve invariant g3");
        find->add_option("--wbound", *wbound, "weight bound override");
        find->callback([=, &exit_code] {
            EllipticRing ring{EllipticInvariants(parse_rational(*g2), parse_rational(*g3))};
            auto lame = build_lame(parse_rational(*m), ring);
            auto search = find_commuting(lame, *order, *wbound);
            Json doc = make_doc("commutant find");
            doc["params"] = {{"m", *m},
                             {"order", *order},
                             {"g2", *g2},
                             {"g3", *g3},
                             {"wbound", *wbound < 0 ? *order : *wbound}};
            doc["found"] = search.op.has_value();
            doc["nullity"] = search.nullity;
            doc["unknowns"] = search.unknowns;
            doc["equations"] = search.equations;
            if (search.op)
                doc["q"] = grammar_string(*search.op);
            exit_code = emit(doc, search.op ? "commutant find: " + grammar_string(*search.op)
                                            : "commutant find: NotFound (bounded search)");
        });
    }

    // ----------------------------------------------------------- spectral-curve
    {
        auto* cmd = app.add_subcommand("spectral-curve", "Burchnall-Chaundy polynomial");
        auto m = std::make_shared<int>(1);
        auto g2 = std::make_shared<std::string>("4");
        auto g3 = std::make_shared<std::string>("1");
        cmd->add_option("--m", *m, "nonnegative integer Lame parameter");
        cmd->add_option("--g2", *g2, "curve invariant g2");
        cmd->add_option("--g3", *g3, "curve invariant g3");
        cmd->callback([=, &exit_code] {
            if (*m < 0)
                throw CLI::ValidationError("--m must be a nonnegative integer");
            EllipticRing ring{EllipticInvariants(parse_rational(*g2), parse_rational(*g3))};
            auto lame = build_lame(*m, ring);
            auto search = find_commuting(lame, 2 * *m + 1);
            Json doc = make_doc("spectral-curve");
            doc["params"] = {{"m", *m}, {"g2", *g2}, {"g3", *g3}};
            if (!search.op) {
                doc["found"] = false;
                exit_code = emit(doc, "spectral-curve: no commuting operator found", 2);
                return;
            }
            SpectralCurve curve = spectral_polynomial(lame, *search.op);
            doc["found"] = true;
            doc["q"] = grammar_string(*search.op);
            doc["curve"] = json_curve(curve);
            doc["discriminant"] = json_rational(curve.discriminant());
            exit_code = emit(doc, "spectral-curve: monic degree " +
                                      std::to_string(curve.degree()) + ", disc = " +
                                      to_string(curve.discriminant()));
        });
    }

    // ----------------------------------------------------------- algebraic-type
    {
        auto* cmd = app.add_subcommand("algebraic-type", "bounded finite-zone verdict");
        auto m = std::make_shared<std::string>("1");
        auto max_order = std::make_shared<int>(7);
        auto samples = std::make_shared<int>(5);
        auto seed = std::make_shared<std::uint64_t>(1);
        auto g2 = std::make_shared<std::string>("4");
        auto g3 = std::make_shared<std::string>("1");
        cmd->add_option("--m", *m, "Lame parameter (p/q)");
        cmd->add_option("--max-order", *max_order, "largest odd order searched");
        cmd->add_option("--samples", *samples, "regularity sample count");
        cmd->add_option("--seed", *seed, "sample seed");
        cmd->add_option("--g2", *g2, "curve invariant g2");
        cmd->add_option("--g3", *g3, "curve invariant g3");
        cmd->callback([=, &exit_code] {
            EllipticRing ring{EllipticInvariants(parse_rational(*g2), parse_rational(*g3))};
            auto lame = build_lame(parse_rational(*m), ring);
            auto verdict = algebraic_type_test(lame, *max_order, -1, *samples, *seed);
            Json doc = make_doc("algebraic-type");
            doc["params"] = {{"m", *m},         {"max_order", *max_order},
                             {"samples", *samples}, {"seed", *seed},
                             {"g2", *g2},       {"g3", *g3}};
            doc["algebraic"] = verdict.algebraic;
            if (verdict.algebraic) {
                doc["witness_order"] = verdict.witness_order;
                doc["q"] = grammar_string(*verdict.witness);
                doc["curve"] = json_curve(*verdict.curve);
                doc["regular_semisimple_samples"] = verdict.regular_semisimple_samples;
            } else {
                doc["verdict"] = "NoWitnessUpTo(" + std::to_string(*max_order) + ")";
            }
            exit_code =
                emit(doc, verdict.algebraic
                              ? "algebraic-type: witness at order " +
                                    std::to_string(verdict.witness_order)
                              : "algebraic-type: NoWitnessUpTo(" + std::to_string(*max_order) +
                                    ")");
        });
    }

    // ------------------------------------------------------------------ lame ...
    {
        auto* lame_cmd = app.add_subcommand("lame", "Hermite/Bethe worked example");
        lame_cmd->require_subcommand(1);

        auto* qm = lame_cmd->add_subcommand("qm", "the commuting pair and curve for integer m");
        auto qm_m = std::make_shared<int>(1);
        auto qm_g2 = std::make_shared<std::string>("4");
        auto qm_g3 = std::make_shared<std::string>("1");
        qm->add_option("--m", *qm_m, "nonnegative integer");
        qm->add_option("--g2", *qm_g2, "curve invariant g2");
        qm->add_option("--g3", *qm_g3, "curve invariant g3");
        qm->callback([=, &exit_code] {
            EllipticRing ring{EllipticInvariants(parse_rational(*qm_g2), parse_rational(*qm_g3))};
            auto lame = build_lame(*qm_m, ring);
            auto search = find_commuting(lame, 2 * *qm_m + 1);
            Json doc = make_doc("lame qm");
            doc["params"] = {{"m", *qm_m}, {"g2", *qm_g2}, {"g3", *qm_g3}};
            doc["lame"] = grammar_string(lame);
            if (search.op) {
                doc["q"] = grammar_string(*search.op);
                doc["curve"] = json_curve(spectral_polynomial(lame, *search.op));
            }
            doc["found"] = search.op.has_value();
            exit_code =
                emit(doc, "lame qm: " + (search.op ? grammar_string(*search.op) : "NotFound"));
        });

        auto* bethe = lame_cmd->add_subcommand("bethe", "solve the Bethe conditions");
        auto be_m = std::make_shared<int>(1);
        auto be_seed = std::make_shared<std::uint64_t>(1);
        auto be_w1 = std::make_shared<std::vector<double>>(std::vector<double>{1.0, 0.0});
        auto be_w2 = std::make_shared<std::vector<double>>(std::vector<double>{0.0, 1.0});
        bethe->add_option("--m", *be_m, "number of movable poles");
        bethe->add_option("--seed", *be_seed, "seed index into the start sequence");
        bethe->add_option("--omega1", *be_w1, "period omega1 as re im")->expected(2);
        bethe->add_option("--omega2", *be_w2, "period omega2 as re im")->expected(2);
        bethe->callback([=, &exit_code] {
            Lattice lat = make_lattice(*be_w1, *be_w2);
            Json doc = make_doc("lame bethe");
            doc["params"] = {{"m", *be_m},
                             {"seed", *be_seed},
                             {"omega1", json_complex(make_complex(*be_w1))},
                             {"omega2", json_complex(make_complex(*be_w2))},
                             {"tolerance", 1e-10}};
            SpectralPoint pt = solve_bethe(*be_m, lat, *be_seed);
            doc["lambda"] = json_complex(pt.lambda);
            Json poles = Json::array();
            for (Complex a : pt.ansatz.poles())
                poles.push_back(json_complex(a));
            doc["poles"] = poles;
            doc["c0"] = json_complex(pt.ansatz.c0());
            doc["residuals"] = {{"bethe", pt.bethe_resid}, {"pi", pt.pi_resid}};
            exit_code = emit(doc, "lame bethe: lambda = (" +
                                      std::to_string(std::real(pt.lambda)) + ", " +
                                      std::to_string(std::imag(pt.lambda)) + ")");
        });

        auto* verify = lame_cmd->add_subcommand("verify", "end-to-end eigenfunction residuals");
        auto ve_m = std::make_shared<int>(1);
        auto ve_seed = std::make_shared<std::uint64_t>(1);
        auto ve_trunc = std::make_shared<int>(15);
        auto ve_w1 = std::make_shared<std::vector<double>>(std::vector<double>{1.0, 0.0});
        auto ve_w2 = std::make_shared<std::vector<double>>(std::vector<double>{0.0, 1.0});
        verify->add_option("--m", *ve_m, "number of movable poles");
        verify->add_option("--seed", *ve_seed, "seed index");
        verify->add_option("--trunc", *ve_trunc, "series terms checked");
        verify->add_option("--omega1", *ve_w1, "period omega1 as re im")->expected(2);
        verify->add_option("--omega2", *ve_w2, "period omega2 as re im")->expected(2);
        verify->callback([=, &exit_code] {
            Lattice lat = make_lattice(*ve_w1, *ve_w2);
            Json doc = make_doc("lame verify");
            doc["params"] = {{"m", *ve_m},
                             {"seed", *ve_seed},
                             {"trunc", *ve_trunc},
                             {"omega1", json_complex(make_complex(*ve_w1))},
                             {"omega2", json_complex(make_complex(*ve_w2))}};
            doc["tolerances"] = {{"bethe", 1e-10}, {"pi", 1e-8}, {"eigen", 1e-6}};
            SpectralPoint pt = solve_bethe(*ve_m, lat, *ve_seed);
            double eigen = eigenfunction_check(pt.ansatz, pt.lambda, lat, *ve_trunc);
            doc["lambda"] = json_complex(pt.lambda);
            Json poles = Json::array();
            for (Complex a : pt.ansatz.poles())
                poles.push_back(json_complex(a));
            doc["poles"] = poles;
            doc["residuals"] = {{"bethe", pt.bethe_resid}, {"pi", pt.pi_resid}, {"eigen", eigen}};
            bool ok = pt.bethe_resid < 1e-10 && pt.pi_resid < 1e-8 && eigen < 1e-6;
            doc["pass"] = ok;
            exit_code = emit(
                doc, std::string("lame verify: ") + (ok ? "pass" : "RESIDUAL TOO LARGE"),
                ok ? 0 : 2);
        });
    }

    // -------------------------------------------------------------------- cm ...
    {
        auto* cm = app.add_subcommand("cm", "elliptic Calogero-Moser (n = 2, 3)");
        cm->require_subcommand(1);
        auto n = std::make_shared<int>(2);
        auto m = std::make_shared<std::string>("1");
        auto seed = std::make_shared<std::uint64_t>(1);
        auto samples = std::make_shared<int>(200);

        auto* build = cm->add_subcommand("build", "the operators L1, L2");
        build->add_option("--n", *n, "number of particles (2 or 3)");
        build->add_option("--m", *m, "coupling (p/q)");
        build->callback([=, &exit_code] {
            auto pair = build_cm(*n, parse_rational(*m), EllipticInvariants(4, 0));
            Json doc = make_doc("cm build");
            doc["params"] = {{"n", *n}, {"m", *m}, {"g2", "4"}, {"g3", "0"}};
            doc["l1"] = cm_operator_json(pair.l1);
            doc["l2"] = cm_operator_json(pair.l2);
            exit_code = emit(doc, "cm build: L2 = " + to_string(pair.l2));
        });

        auto* integral = cm->add_subcommand("integral", "solve for the order-j integral");
        auto order = std::make_shared<int>(3);
        integral->add_option("--n", *n, "number of particles (2 or 3)");
        integral->add_option("--m", *m, "coupling (p/q)");
        integral->add_option("--order", *order, "target order j <= n");
        integral->add_option("--seed", *seed, "sample seed");
        integral->callback([=, &exit_code] {
            Lattice lat = flat_square_lattice();
            EllipticInvariants inv(4, 0);
            CMOperator found =
                solve_higher_integral(*n, parse_rational(*m), *order, inv, lat, 40, *seed);
            auto pair = build_cm(*n, parse_rational(*m), inv);
            double resid = numeric_residual(cm_commutator(pair.l2, found), lat, 200, *seed + 1);
            Json doc = make_doc("cm integral");
            doc["params"] = {{"n", *n},       {"m", *m},   {"order", *order},
                             {"seed", *seed}, {"g2", "4"}, {"g3", "0"},
                             {"tolerance", 1e-8}};
            doc["integral"] = cm_operator_json(found);
            doc["residual_vs_l2"] = resid;
            exit_code = emit(doc, "cm integral: " + to_string(found), resid < 1e-8 ? 0 : 2);
        });

        auto* check = cm->add_subcommand("commute-check", "pairwise commutativity residuals");
        check->add_option("--n", *n, "number of particles (2 or 3)");
        check->add_option("--m", *m, "coupling (p/q)");
        check->add_option("--samples", *samples, "evaluation points");
        check->add_option("--seed", *seed, "sample seed");
        check->callback([=, &exit_code] {
            Lattice lat = flat_square_lattice();
            EllipticInvariants inv(4, 0);
            Rational mq = parse_rational(*m);
            auto pair = build_cm(*n, mq, inv);
            Json doc = make_doc("cm commute-check");
            doc["params"] = {{"n", *n},           {"m", *m}, {"samples", *samples},
                             {"seed", *seed},     {"g2", "4"}, {"g3", "0"},
                             {"tolerance", 1e-8}};
            bool l1l2 = cm_commutator(pair.l1, pair.l2).is_zero();
            doc["l1_l2_exact_zero"] = l1l2;
            double worst = 0;
            if (*n >= 3) {
                CMOperator l3 = solve_higher_integral(*n, mq, 3, inv, lat, 40, *seed);
                doc["l1_l3_exact_zero"] = cm_commutator(pair.l1, l3).is_zero();
                double r23 = numeric_residual(cm_commutator(pair.l2, l3), lat, *samples, *seed);
                doc["l2_l3_residual"] = r23;
                worst = r23;
            }
            bool ok = l1l2 && worst < 1e-8;
            doc["pass"] = ok;
            exit_code =
                emit(doc, std::string("cm commute-check: ") + (ok ? "pass" : "FAIL"), ok ? 0 : 2);
        });

        auto* bethe = cm->add_subcommand("bethe", "Bethe state (n = 2)");
        bethe->add_option("--n", *n, "number of particles (2 supported)");
        bethe->add_option("--m", *m, "integer coupling");
        bethe->add_option("--seed", *seed, "seed index");
        bethe->callback([=, &exit_code] {
            if (*n != 2)
                throw CLI::ValidationError("cm bethe: only n = 2 is supported");
            Lattice lat = flat_square_lattice();
            int mi = static_cast<int>(to_double(parse_rational(*m)));
            CMBetheState st = cm_solve_bethe_n2(mi, lat, *seed);
            double resid = cm_bethe_residual(st, lat);
            auto eig = cm_eigen_check(st, lat, 12);
            Json doc = make_doc("cm bethe");
            doc["params"] = {{"n", *n},
                             {"m", mi},
                             {"seed", *seed},
                             {"t", json_complex(st.t())},
                             {"tolerance", 1e-8}};
            Json poles = Json::array();
            for (auto [a, r] : st.poles())
                poles.push_back(Json{{"pole", json_complex(a)}, {"residue_class", r}});
            doc["poles"] = poles;
            doc["residuals"] = {{"bethe", resid}, {"eigen", eig.residual}};
            doc["pi"] = Json::array({json_complex(eig.pi[0]), json_complex(eig.pi[1])});
            bool ok = resid < 1e-8 && eig.residual < 1e-5;
            doc["pass"] = ok;
            exit_code = emit(doc, std::string("cm bethe: ") + (ok ? "pass" : "FAIL"), ok ? 0 : 2);
        });
    }

    // -------------------------------------------------------------- monodromy ...
    {
        auto* mono = app.add_subcommand("monodromy", "numerical differential-Galois probe");
        mono->require_subcommand(1);
        auto m = std::make_shared<std::string>("1");
        auto w1 = std::make_shared<std::vector<double>>(std::vector<double>{1.0, 0.0});
        auto w2 = std::make_shared<std::vector<double>>(std::vector<double>{0.0, 1.0});

        auto* group = mono->add_subcommand("group", "loop matrices at one eigenvalue");
        auto lambda = std::make_shared<std::vector<double>>(std::vector<double>{1.0 / 3, 0.0});
        group->add_option("--m", *m, "Lame parameter (p/q)");
        group->add_option("--lambda", *lambda, "eigenvalue as re im")->expected(2);
        group->add_option("--omega1", *w1, "period omega1 as re im")->expected(2);
        group->add_option("--omega2", *w2, "period omega2 as re im")->expected(2);
        group->callback([=, &exit_code] {
            Lattice lat = make_lattice(*w1, *w2);
            double md = to_double(parse_rational(*m));
            auto r = monodromy_group(md, make_complex(*lambda), lat, default_basepoint(lat));
            Json doc = make_doc("monodromy group");
            doc["params"] = {{"m", *m},
                             {"lambda", json_complex(make_complex(*lambda))},
                             {"omega1", json_complex(make_complex(*w1))},
                             {"omega2", json_complex(make_complex(*w2))}};
            doc["loop_a"] = matrix_json(r.loop_a);
            doc["loop_b"] = matrix_json(r.loop_b);
            doc["loop_puncture"] = matrix_json(r.loop_puncture);
            doc["defects"] = {{"det", r.det_defect},
                              {"relation", r.relation_defect},
                              {"commutator", r.commutator_defect},
                              {"common_line", r.common_line_defect},
                              {"degeneracy", r.degeneracy}};
            exit_code = emit(doc, "monodromy group: commutator defect " +
                                      std::to_string(r.commutator_defect));
        });

        auto* scan = mono->add_subcommand("scan", "defect table over eigenvalues");
        auto lambdas = std::make_shared<std::vector<double>>();
        scan->add_option("--m", *m, "Lame parameter (p/q)");
        scan->add_option("--lambdas", *lambdas, "flat list re im re im ...")->required();
        scan->add_option("--omega1", *w1, "period omega1 as re im")->expected(2);
        scan->add_option("--omega2", *w2, "period omega2 as re im")->expected(2);
        scan->callback([=, &exit_code] {
            if (lambdas->size() % 2 != 0)
                throw CLI::ValidationError("--lambdas needs pairs re im");
            Lattice lat = make_lattice(*w1, *w2);
            double md = to_double(parse_rational(*m));
            std::vector<Complex> ls;
            for (std::size_t i = 0; i + 1 < lambdas->size(); i += 2)
                ls.emplace_back((*lambdas)[i], (*lambdas)[i + 1]);
            auto rows = commutativity_scan(md, ls, lat);
            Json doc = make_doc("monodromy scan");
            doc["params"] = {{"m", *m},
                             {"omega1", json_complex(make_complex(*w1))},
                             {"omega2", json_complex(make_complex(*w2))},
                             {"tolerances", Json{{"det", 1e-8}, {"relation", 1e-6}}}};
            Json table = Json::array();
            int flagged = 0;
            for (const auto& row : rows) {
                table.push_back(Json{{"lambda", json_complex(row.lambda)},
                                     {"commutator", row.commutator_defect},
                                     {"det", row.det_defect},
                                     {"relation", row.relation_defect},
                                     {"common_line", row.common_line_defect},
                                     {"degeneracy", row.degeneracy},
                                     {"flagged", row.flagged}});
                flagged += row.flagged ? 1 : 0;
            }
            doc["table"] = table;
            exit_code = emit(doc, "monodromy scan: " + std::to_string(rows.size()) +
                                      " eigenvalues, " + std::to_string(flagged) + " flagged");
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e); // --help and friends
        app.exit(e);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
