#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <graphbridge/container.hpp>
#include <graphbridge/pretrain.hpp>

#include "test_util.hpp"

using namespace graphbridge;
using gbtest::random_graph;

namespace {

bool graphs_equal(const Graph& a, const Graph& b) {
    GraphSet sa, sb;
    sa.kind = sb.kind = TaskKind::GraphTask;
    sa.num_classes = sb.num_classes = 2;
    sa.feature_dim = a.feature_dim();
    sb.feature_dim = b.feature_dim();
    Graph ca = a, cb = b;
    ca.graph_label = cb.graph_label = 0;
    ca.node_labels.clear();
    cb.node_labels.clear();
    sa.graphs.push_back(ca);
    sb.graphs.push_back(cb);
    return graphset_to_json(sa).dump() == graphset_to_json(sb).dump();
}

std::string ckpt_bytes(const Checkpoint& ck) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& p : ck.params) params[p.name] = p.value.data();
    return params.dump();
}

}  // namespace

TEST_CASE("augment: identity at ratio 0, count contracts, determinism") {
    Rng rng(4);
    Graph g = random_graph(4, 0.9, 3, rng);
    for (AugmentKind kind : {AugmentKind::NodeDrop, AugmentKind::EdgePerturb, AugmentKind::AttrMask,
                             AugmentKind::Subgraph}) {
        Graph out = augment(g, {kind, 0.0, 99});
        CHECK(graphs_equal(out, g));
    }

    Graph dropped = augment(g, {AugmentKind::NodeDrop, 0.5, 7});
    CHECK(dropped.num_nodes == 2);

    Graph again = augment(g, {AugmentKind::NodeDrop, 0.5, 7});
    CHECK(graphs_equal(dropped, again));

    CHECK_THROWS_AS(augment(g, {AugmentKind::NodeDrop, 1.0, 7}), ConfigError);
    CHECK_THROWS_AS(augment(g, {AugmentKind::NodeDrop, 1.5, 7}), ConfigError);
}

TEST_CASE("augment: specific mechanics per kind") {
    Rng rng(9);
    Graph g = random_graph(10, 0.4, 4, rng);

    Graph masked = augment(g, {AugmentKind::AttrMask, 0.3, 3});
    std::size_t zero_rows = 0;
    for (std::size_t i = 0; i < masked.num_nodes; ++i) {
        bool all_zero = true;
        for (std::size_t c = 0; c < 4; ++c) all_zero = all_zero && masked.features.at(i, c) == 0.0;
        if (all_zero) ++zero_rows;
    }
    CHECK(zero_rows == 3);  // ceil(0.3 * 10)
    CHECK(masked.adj.edges == g.adj.edges);

    auto undirected_count = [](const Graph& gr) {
        std::size_t c = 0;
        for (const auto& [s, d] : gr.adj.edges)
            if (s < d) ++c;
        return c;
    };
    Graph perturbed = augment(g, {AugmentKind::EdgePerturb, 0.4, 5});
    CHECK(undirected_count(perturbed) == undirected_count(g));
    CHECK(perturbed.num_nodes == g.num_nodes);

    Graph sub = augment(g, {AugmentKind::Subgraph, 0.3, 5});
    CHECK(sub.num_nodes == 7);  // ceil(0.7 * 10)
}

TEST_CASE("augment never produces dangling edges over 1000 random specs") {
    Rng rng(31337);
    for (int trial = 0; trial < 1000; ++trial) {
        Graph g = random_graph(3 + rng.below(10), 0.15 + 0.7 * rng.uniform(), 3, rng);
        AugmentKind kind = static_cast<AugmentKind>(rng.below(4));
        double ratio = 0.6 * rng.uniform();
        Graph out = augment(g, {kind, ratio, rng.next_u64()});
        REQUIRE(out.num_nodes >= 1);
        for (const auto& [s, d] : out.adj.edges) {
            REQUIRE(s >= 0);
            REQUIRE(static_cast<std::size_t>(s) < out.num_nodes);
            REQUIRE(d >= 0);
            REQUIRE(static_cast<std::size_t>(d) < out.num_nodes);
        }
    }
}

TEST_CASE("perturb_weights: identity at eta 0, determinism, zero-variance rule") {
    BackboneConfig cfg{.kind = BackboneKind::GCN, .layers = 2, .in_dim = 4, .hidden_dim = 6};
    ParamList params = init_backbone(cfg, 8);

    ParamList same = perturb_weights(params, 0.0, 123);
    for (std::size_t i = 0; i < params.size(); ++i)
        CHECK(same[i].value.data() == params[i].value.data());

    ParamList a = perturb_weights(params, 1.0, 123);
    ParamList b = perturb_weights(params, 1.0, 123);
    for (std::size_t i = 0; i < params.size(); ++i) {
        CHECK(a[i].value.data() == b[i].value.data());
        CHECK(a[i].value.shape() == params[i].value.shape());
    }

    // biases start all-zero: zero variance, so they must come back unchanged
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].name.ends_with("bias")) CHECK(a[i].value.data() == params[i].value.data());

    ParamList c = perturb_weights(params, 1.0, 124);
    CHECK(a[0].value.data() != c[0].value.data());
}

TEST_CASE("ntxent: frozen values, scale invariance, errors") {
    Tensor za = Tensor::matrix(2, 2, {1, 0, 0, 1});
    Tensor zb = Tensor::matrix(2, 2, {1, 0, 0, 1});
    double expected = std::log((std::exp(1.0) + 2.0) / std::exp(1.0));
    CHECK(ntxent_loss(za, zb, 1.0).item() == doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected == doctest::Approx(0.551444).epsilon(1e-5));

    // all-equal embeddings: every similarity is 1, loss = ln(2N-1) for any tau
    Tensor ua = Tensor::matrix(2, 3, {1, 2, 3, 1, 2, 3});
    CHECK(ntxent_loss(ua, ua, 0.5).item() == doctest::Approx(std::log(3.0)).epsilon(1e-9));
    CHECK(ntxent_loss(ua, ua, 2.0).item() == doctest::Approx(std::log(3.0)).epsilon(1e-9));

    Rng rng(2);
    Tensor ra = Tensor({4, 5}, [&] {
        std::vector<double> v(20);
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        return v;
    }());
    Tensor rb = Tensor({4, 5}, [&] {
        std::vector<double> v(20);
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        return v;
    }());
    double base = ntxent_loss(ra, rb, 0.5).item();
    CHECK(base >= 0.0);
    CHECK(ntxent_loss(scale(ra, 5.0), scale(rb, 5.0), 0.5).item() == doctest::Approx(base).epsilon(1e-12));

    CHECK_THROWS_AS(ntxent_loss(Tensor::matrix(1, 2, {1, 0}), Tensor::matrix(1, 2, {1, 0}), 0.5),
                    ConfigError);
    CHECK_THROWS_AS(ntxent_loss(Tensor::matrix(2, 2, {0, 0, 1, 0}), za, 0.5), NumericError);
}

TEST_CASE("pretrain: epochs=0 identity, determinism, loss descent") {
    GraphSet mol = synth_mol({.count = 24, .min_nodes = 4, .max_nodes = 8}, 5);
    BackboneConfig backbone{.kind = BackboneKind::GCN, .layers = 2, .hidden_dim = 16};

    PretrainConfig zero{.method = PretrainMethod::GraphCL, .epochs = 0, .batch_size = 8, .seed = 3};
    PretrainResult r0 = pretrain(mol, backbone, zero);
    Checkpoint init = Checkpoint::fresh(r0.checkpoint.config, 3, "graphcl");
    CHECK(ckpt_bytes(r0.checkpoint) == ckpt_bytes(init));
    CHECK(r0.epoch_loss.empty());

    for (PretrainMethod method : {PretrainMethod::GraphCL, PretrainMethod::SimGRACE}) {
        PretrainConfig cfg{.method = method, .epochs = 10, .batch_size = 8, .lr = 5e-3, .seed = 3};
        PretrainResult ra = pretrain(mol, backbone, cfg);
        PretrainResult rb = pretrain(mol, backbone, cfg);
        CHECK(ckpt_bytes(ra.checkpoint) == ckpt_bytes(rb.checkpoint));
        CHECK(ra.epoch_loss == rb.epoch_loss);
        REQUIRE(ra.epoch_loss.size() == 10);
        INFO(pretrain_method_name(method), " loss ", ra.epoch_loss.front(), " -> ", ra.epoch_loss.back());
        CHECK(ra.epoch_loss.back() < ra.epoch_loss.front());
    }

    GraphSet node = synth_sbm({.block_sizes = {8, 8}}, 1);
    PretrainConfig cfg{.epochs = 1};
    CHECK_THROWS_AS(pretrain(node, backbone, cfg), ConfigError);
}
