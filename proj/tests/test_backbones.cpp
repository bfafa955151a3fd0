#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include <graphbridge/checkpoint.hpp>
#include <graphbridge/gradcheck.hpp>

#include "test_util.hpp"

using namespace graphbridge;
using gbtest::permute_graph;
using gbtest::random_graph;

namespace {

std::string tmp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "graphbridge_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::vector<Tensor> values_of(const ParamList& params) {
    std::vector<Tensor> v;
    for (const auto& p : params) v.push_back(p.value);
    return v;
}

}  // namespace

TEST_CASE("param_count closed forms") {
    BackboneConfig gcn{.kind = BackboneKind::GCN, .layers = 2, .in_dim = 8, .hidden_dim = 100};
    CHECK(param_count(gcn, ParamRole::Backbone) == 11000);
    CHECK(param_count(gcn, ParamRole::Side, {.side_hidden = 16}) == 416);
    CHECK(param_count(gcn, ParamRole::Head, {.head_in = 16, .num_classes = 3}) == 51);
    CHECK(param_count(gcn, ParamRole::Head, {.edge_head = true}) == 0);

    // side and head counts do not depend on the backbone kind
    BackboneConfig gat = gcn;
    gat.kind = BackboneKind::GAT;
    BackboneConfig gin = gcn;
    gin.kind = BackboneKind::GIN;
    CHECK(param_count(gat, ParamRole::Side, {.side_hidden = 16}) ==
          param_count(gcn, ParamRole::Side, {.side_hidden = 16}));
    CHECK(param_count(gin, ParamRole::Side, {.side_hidden = 16}) ==
          param_count(gcn, ParamRole::Side, {.side_hidden = 16}));

    // closed form matches the materialized parameter lists
    for (BackboneKind kind : {BackboneKind::GCN, BackboneKind::GAT, BackboneKind::GIN}) {
        BackboneConfig cfg{.kind = kind, .layers = 3, .in_dim = 7, .hidden_dim = 10};
        CHECK(total_size(init_backbone(cfg, 1)) == param_count(cfg, ParamRole::Backbone));
    }
}

TEST_CASE("zero weights propagate zeros through bias-free GCN layers") {
    BackboneConfig cfg{.kind = BackboneKind::GCN, .layers = 2, .in_dim = 3, .hidden_dim = 4};
    ParamList params = init_backbone(cfg, 0);
    for (auto& p : params) p.value = Tensor::zeros(p.value.shape());
    Rng rng(3);
    Graph g = random_graph(6, 0.4, 3, rng);
    auto acts = backbone_forward(cfg, values_of(params), GraphContext::make(g.adj), g.features, true);
    for (const Tensor& t : acts.layers)
        for (double v : t.data()) CHECK(v == 0.0);
}

TEST_CASE("GCN and GIN are permutation-equivariant") {
    Rng rng(17);
    for (BackboneKind kind : {BackboneKind::GCN, BackboneKind::GIN}) {
        for (int trial = 0; trial < 10; ++trial) {
            BackboneConfig cfg{.kind = kind, .layers = 2, .in_dim = 5, .hidden_dim = 8};
            ParamList params = init_backbone(cfg, 100 + static_cast<std::uint64_t>(trial));
            Graph g = random_graph(9, 0.35, 5, rng);
            std::vector<std::size_t> perm(g.num_nodes);
            for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
            rng.shuffle(perm);
            Graph pg = permute_graph(g, perm);

            auto out = backbone_forward(cfg, values_of(params), GraphContext::make(g.adj), g.features, false);
            auto pout = backbone_forward(cfg, values_of(params), GraphContext::make(pg.adj), pg.features, false);
            for (std::size_t i = 0; i < g.num_nodes; ++i)
                for (std::size_t c = 0; c < cfg.hidden_dim; ++c)
                    CHECK(std::abs(out.final.at(i, c) - pout.final.at(perm[i], c)) <= 1e-9);
        }
    }
}

TEST_CASE("capture flag does not change the final output") {
    Rng rng(23);
    for (BackboneKind kind : {BackboneKind::GCN, BackboneKind::GAT, BackboneKind::GIN}) {
        BackboneConfig cfg{.kind = kind, .layers = 3, .in_dim = 4, .hidden_dim = 6};
        ParamList params = init_backbone(cfg, 5);
        Graph g = random_graph(8, 0.4, 4, rng);
        GraphContext ctx = GraphContext::make(g.adj);
        auto off = backbone_forward(cfg, values_of(params), ctx, g.features, false);
        auto on = backbone_forward(cfg, values_of(params), ctx, g.features, true);
        CHECK(off.final.data() == on.final.data());
        CHECK(on.layers.size() == 3);
        for (const Tensor& b : on.layers) CHECK(b.cols() == cfg.hidden_dim);
    }
}

TEST_CASE("GAT multi-head keeps hidden width and stays finite") {
    BackboneConfig cfg{.kind = BackboneKind::GAT, .layers = 2, .in_dim = 5, .hidden_dim = 8, .gat_heads = 2};
    ParamList params = init_backbone(cfg, 9);
    Rng rng(31);
    Graph g = random_graph(7, 0.5, 5, rng);
    auto acts = backbone_forward(cfg, values_of(params), GraphContext::make(g.adj), g.features, true);
    CHECK(acts.final.cols() == 8);
    CHECK(acts.final.all_finite());
    BackboneConfig bad = cfg;
    bad.gat_heads = 3;
    CHECK_THROWS_AS(init_backbone(bad, 1), ConfigError);
}

TEST_CASE("dimension mismatch demands an input bridge, naming both dims") {
    BackboneConfig cfg{.kind = BackboneKind::GCN, .layers = 1, .in_dim = 8, .hidden_dim = 4};
    ParamList params = init_backbone(cfg, 0);
    Rng rng(1);
    Graph g = random_graph(5, 0.5, 3, rng);
    CHECK_THROWS_WITH_AS(backbone_forward(cfg, values_of(params), GraphContext::make(g.adj), g.features, false),
                         doctest::Contains("3"), ConfigError);
}

TEST_CASE("all three backbones pass grad_check through a cross-entropy head") {
    Rng rng(77);
    Graph g = random_graph(10, 0.35, 6, rng);
    GraphContext ctx = GraphContext::make(g.adj);
    std::vector<std::int64_t> targets;
    for (std::size_t i = 0; i < 10; ++i) targets.push_back(static_cast<std::int64_t>(rng.below(3)));

    for (BackboneKind kind : {BackboneKind::GCN, BackboneKind::GAT, BackboneKind::GIN}) {
        BackboneConfig cfg{.kind = kind, .layers = 2, .in_dim = 6, .hidden_dim = 6};
        ParamList params = init_backbone(cfg, 19);
        Rng hrng(5);
        params.push_back({"head.weight", glorot(6, 3, hrng)});
        params.push_back({"head.bias", zero_bias(3)});
        auto fwd = [&](const std::vector<Tensor>& p) {
            std::vector<Tensor> body(p.begin(), p.end() - 2);
            Tensor out = backbone_forward(cfg, body, ctx, g.features, false).final;
            Tensor logits = add(matmul(out, p[p.size() - 2]), p[p.size() - 1]);
            return cross_entropy(log_softmax(logits), targets);
        };
        auto res = grad_check(fwd, params, 1e-4);
        INFO(backbone_kind_name(kind), " worst rel err ", res.worst());
        CHECK(res.all_pass);
    }
}

TEST_CASE("checkpoint round trip is bitwise, errors carry diagnostics") {
    BackboneConfig cfg{.kind = BackboneKind::GIN, .layers = 2, .in_dim = 5, .hidden_dim = 7};
    Checkpoint ck = Checkpoint::fresh(cfg, 42, "none");
    std::string path = tmp_path("ck.json");
    save_ckpt(ck, path);
    Checkpoint loaded = load_ckpt(path);
    REQUIRE(loaded.params.size() == ck.params.size());
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
        CHECK(loaded.params[i].name == ck.params[i].name);
        CHECK(loaded.params[i].value.data() == ck.params[i].value.data());  // bitwise
    }
    CHECK(loaded.method == "none");
    CHECK(loaded.seed == 42);

    // truncated file: parse error naming a byte offset
    std::string text = read_text_file(path);
    write_text_file(path, text.substr(0, text.size() / 2));
    CHECK_THROWS_WITH_AS(load_ckpt(path), doctest::Contains("byte"), DataError);

    // a config claiming fewer layers than the stored arrays is a shape error
    save_ckpt(ck, path);
    auto j = nlohmann::json::parse(read_text_file(path));
    j["config"]["layers"] = 1;
    write_text_file(path, j.dump());
    CHECK_THROWS_AS(load_ckpt(path), DataError);

    // corrupt one array length
    save_ckpt(ck, path);
    j = nlohmann::json::parse(read_text_file(path));
    j["params"]["layers.0.mlp1.bias"].push_back(0.5);
    write_text_file(path, j.dump());
    CHECK_THROWS_WITH_AS(load_ckpt(path), doctest::Contains("layers.0.mlp1.bias"), DataError);
}
