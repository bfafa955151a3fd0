#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <graphbridge/bridges.hpp>
#include <graphbridge/synth.hpp>

#include "test_util.hpp"

using namespace graphbridge;
using gbtest::random_graph;

TEST_CASE("input_adapt: identity, pad, truncate, rand_project determinism") {
    Tensor x = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor same = input_adapt(x, {AdapterKind::Identity, 3, 3});
    CHECK(same.data() == x.data());

    Tensor padded = input_adapt(x, {AdapterKind::PadTruncate, 3, 5});
    CHECK(padded.cols() == 5);
    CHECK(padded.data() == std::vector<double>{1, 2, 3, 0, 0, 4, 5, 6, 0, 0});

    Tensor cut = input_adapt(x, {AdapterKind::PadTruncate, 3, 2});
    CHECK(cut.data() == std::vector<double>{1, 2, 4, 5});

    Tensor p1 = input_adapt(x, {AdapterKind::RandProject, 3, 4, 9});
    Tensor p2 = input_adapt(x, {AdapterKind::RandProject, 3, 4, 9});
    CHECK(p1.data() == p2.data());
    Tensor p3 = input_adapt(x, {AdapterKind::RandProject, 3, 4, 10});
    CHECK(p1.data() != p3.data());

    CHECK_THROWS_AS(input_adapt(x, {AdapterKind::Identity, 3, 4}), ConfigError);
    CHECK_THROWS_AS(input_adapt(x, {AdapterKind::PadTruncate, 4, 4}), ConfigError);
}

TEST_CASE("pad_truncate with src <= dst loses nothing") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(4);
        for (double& c : v) c = rng.uniform(-3.0, 3.0);
        Tensor x = Tensor::matrix(1, 4, v);
        Tensor up = input_adapt(x, {AdapterKind::PadTruncate, 4, 7});
        Tensor back = input_adapt(up, {AdapterKind::PadTruncate, 7, 4});
        CHECK(back.data() == x.data());
    }
}

TEST_CASE("head_forward: pooled mean, logistic edge score, uniform logits") {
    // all node reps identical: pooled rep equals that vector
    Tensor z = Tensor::matrix(3, 2, {0.5, -1.0, 0.5, -1.0, 0.5, -1.0});
    std::vector<std::int64_t> gid{0, 0, 0};
    HeadContext ctx;
    ctx.graph_id = &gid;
    ctx.num_graphs = 1;
    Tensor w = Tensor::matrix(2, 2, {1, 0, 0, 1});
    Tensor b = Tensor::zeros({1, 2});
    Tensor pooled = head_forward({HeadKind::GraphCls, 2, 2}, z, ctx, &w, &b);
    CHECK(pooled.at(0, 0) == doctest::Approx(0.5));
    CHECK(pooled.at(0, 1) == doctest::Approx(-1.0));

    // z_u = z_v = (1,0): sigma(1)
    Tensor ze = Tensor::matrix(2, 2, {1, 0, 1, 0});
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs{{0, 1}};
    HeadContext ectx;
    ectx.pairs = &pairs;
    Tensor score = head_forward({HeadKind::EdgePred, 2, 2}, ze, ectx, nullptr, nullptr);
    CHECK(score[0] == doctest::Approx(0.7310585786).epsilon(1e-9));

    // zero weights, zero bias: uniform logits, cross entropy ln C
    Tensor zw = Tensor::zeros({2, 4});
    Tensor zb = Tensor::zeros({1, 4});
    Tensor logits = head_forward({HeadKind::NodeCls, 2, 4}, z, HeadContext{}, &zw, &zb);
    Tensor loss = cross_entropy(log_softmax(logits), {0, 1, 3});
    CHECK(loss.item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    CHECK_THROWS_AS(head_forward({HeadKind::GraphCls, 2, 2}, z, HeadContext{}, &w, &b), ConfigError);
    CHECK_THROWS_AS(head_forward({HeadKind::EdgePred, 2, 2}, z, HeadContext{}, nullptr, nullptr),
                    ConfigError);
}

TEST_CASE("knn_graph: pairs, collinear chain, degree contract, isomorphism") {
    Tensor two = Tensor::matrix(2, 3, {0, 0, 0, 1, 0, 0});
    Graph g2 = knn_graph(two, 1);
    CHECK(g2.adj.edges == std::vector<std::pair<std::int64_t, std::int64_t>>{{0, 1}, {1, 0}});

    Tensor line = Tensor::matrix(3, 3, {0, 0, 0, 1, 0, 0, 3, 0, 0});
    Graph gl = knn_graph(line, 1);
    CHECK(gl.adj.edges ==
          std::vector<std::pair<std::int64_t, std::int64_t>>{{0, 1}, {1, 0}, {1, 2}, {2, 1}});

    CHECK_THROWS_AS(knn_graph(two, 2), ConfigError);

    Rng rng(5);
    std::vector<double> pts(20 * 3);
    for (double& v : pts) v = rng.uniform(-1.0, 1.0);
    Tensor cloud = Tensor::matrix(20, 3, pts);
    auto nbrs = knn_neighbors(cloud, 4);
    for (const auto& row : nbrs) CHECK(row.size() == 4);  // degree k before symmetrization

    // permuting point order yields an isomorphic graph
    std::vector<std::size_t> perm(20);
    for (std::size_t i = 0; i < 20; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<double> ppts(20 * 3);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t c = 0; c < 3; ++c) ppts[perm[i] * 3 + c] = cloud.at(i, c);
    Graph base = knn_graph(cloud, 4);
    Graph permuted = knn_graph(Tensor::matrix(20, 3, ppts), 4);
    std::vector<std::pair<std::int64_t, std::int64_t>> mapped;
    for (const auto& [s, d] : base.adj.edges)
        mapped.emplace_back(static_cast<std::int64_t>(perm[static_cast<std::size_t>(s)]),
                            static_cast<std::int64_t>(perm[static_cast<std::size_t>(d)]));
    std::sort(mapped.begin(), mapped.end());
    CHECK(mapped == permuted.adj.edges);
}

TEST_CASE("two-cluster clouds have higher mean clustering than spheres") {
    GraphSet set = synth_ptcld({.count = 12, .points = 64, .num_classes = 3}, 21);
    double sum_sphere = 0.0, sum_cluster = 0.0;
    std::size_t n_sphere = 0, n_cluster = 0;
    for (const Graph& g : set.graphs) {
        if (*g.graph_label == 1) continue;  // cube class not part of this comparison
        Graph built = knn_graph(g.features, 8);
        auto cc = clustering_coefficients(built);
        double mean = 0.0;
        for (double v : cc) mean += v;
        mean /= static_cast<double>(cc.size());
        if (*g.graph_label == 0) {
            sum_sphere += mean;
            ++n_sphere;
        } else {
            sum_cluster += mean;
            ++n_cluster;
        }
    }
    REQUIRE(n_sphere > 0);
    REQUIRE(n_cluster > 0);
    INFO("sphere ", sum_sphere / n_sphere, " two-cluster ", sum_cluster / n_cluster);
    CHECK(sum_cluster / static_cast<double>(n_cluster) > sum_sphere / static_cast<double>(n_sphere));
}

TEST_CASE("sample_edge_task: holdout, balance, no collisions") {
    Rng rng(8);
    Graph g = random_graph(14, 0.25, 3, rng);
    std::size_t e = 0;
    for (const auto& [s, d] : g.adj.edges)
        if (s < d) ++e;
    REQUIRE(e >= 3);

    EdgeTask task = sample_edge_task(g, 0.3, 17);
    std::size_t k = static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(e)));
    CHECK(task.pairs.size() == 2 * k);
    std::size_t positives = 0;
    for (std::int64_t l : task.labels) positives += static_cast<std::size_t>(l);
    CHECK(positives == k);  // exactly balanced

    std::set<std::pair<std::int64_t, std::int64_t>> remaining;
    for (auto [s, d] : task.graph.adj.edges) {
        if (s > d) std::swap(s, d);
        remaining.insert({s, d});
    }
    std::set<std::pair<std::int64_t, std::int64_t>> original;
    for (auto [s, d] : g.adj.edges) {
        if (s > d) std::swap(s, d);
        original.insert({s, d});
    }
    for (std::size_t i = 0; i < task.pairs.size(); ++i) {
        auto p = task.pairs[i];
        if (p.first > p.second) std::swap(p.first, p.second);
        if (task.labels[i] == 1) {
            CHECK(remaining.count(p) == 0);  // held-out positives left the adjacency
            CHECK(original.count(p) == 1);
        } else {
            CHECK(original.count(p) == 0);  // negatives never collide with true edges
        }
    }

    // minimal holdout: two-edge graph at a small ratio gives 1 positive + 1 negative
    Graph tiny;
    tiny.num_nodes = 4;
    tiny.features = Tensor::zeros({4, 2});
    tiny.adj = SparseAdj::from_edges(4, {{0, 1}, {1, 0}, {2, 3}, {3, 2}});
    EdgeTask small = sample_edge_task(tiny, 0.4, 3);
    CHECK(small.pairs.size() == 2);
    CHECK(small.labels == std::vector<std::int64_t>{1, 0});

    CHECK_THROWS_AS(sample_edge_task(tiny, 1.0, 3), ConfigError);

    EdgeTask again = sample_edge_task(g, 0.3, 17);
    CHECK(again.pairs == task.pairs);  // deterministic per seed
}
