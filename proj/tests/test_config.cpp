#include <string>

#include <gtest/gtest.h>

#include "fiberlab/config.hpp"

using namespace fiberlab;

namespace {

const char* kWarped = R"(family:
  kind: warped-torus
  delta: 0.3
  base_length: 4
resolution:
  base_per_unit: 128
  fiber_nodes: 32
ball:
  center: [0.75]
  radius: 0.25
spectrum:
  count: 12
  theta_max: 50
thresholds:
  lambda_min: 2.5e-6
estimates:
  lambda_ric: auto
sweep:
  epsilons: [0.2, 0.1, 0.05]
output: out/w
seed: 7
)";

std::string message(const std::string& text) {
    try {
        parse_config(text, "cfg.yaml");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, ParsesFields) {
    const auto c = parse_config(kWarped);
    EXPECT_EQ(c.family.kind, FamilyKind::WarpedTorus);
    EXPECT_DOUBLE_EQ(c.family.delta, 0.3);
    EXPECT_DOUBLE_EQ(c.family.epsilon, 0.1);
    EXPECT_EQ(c.family.resolution.base_per_unit, 128);
    EXPECT_EQ(c.center, std::vector<double>{0.75});
    ASSERT_TRUE(c.theta_max.has_value());
    EXPECT_DOUBLE_EQ(*c.theta_max, 50.0);
    EXPECT_DOUBLE_EQ(c.lambda_min, 2.5e-6);
    EXPECT_FALSE(c.lambda_ric.has_value());
    EXPECT_EQ(c.epsilons, (std::vector<double>{0.2, 0.1, 0.05}));
    EXPECT_EQ(c.seed, 7u);
    EXPECT_TRUE(c.cache);
}

TEST(Config, EmptyTextIsDefaultFlat) {
    ExperimentConfig d;
    d.family.base_length = 4.0;
    d.center = {2.0};
    const auto c = parse_config("family: {base_length: 4}\nball: {center: [2.0]}\n");
    EXPECT_EQ(to_yaml(c), to_yaml(d));
}

TEST(Config, RoundTripIsIdentity) {
    auto c = parse_config(kWarped);
    c.lambda_ric = 0.125;
    c.flow_function = FlowFunction::Eigenmode;
    c.flow_mode = 3;
    c.dt_factor = 1.0 / 30.0;
    const std::string once = to_yaml(c);
    const auto back = parse_config(once);
    EXPECT_EQ(to_yaml(back), once);
    EXPECT_EQ(back.dt_factor, c.dt_factor);
    EXPECT_EQ(back.lambda_ric, c.lambda_ric);
    EXPECT_EQ(config_hash(back), config_hash(c));
    c.seed += 1;
    EXPECT_NE(config_hash(back), config_hash(c));
}

TEST(Config, UnknownKeysNameTheLine) {
    EXPECT_EQ(message("family:\n  kind: flat-product-torus\n  epsilom: 0.1\n"),
              "cfg.yaml:3: 'family': unknown key 'epsilom'");
    EXPECT_EQ(message("thresholds:\n  lambda_min: 1e-6\n  level_tol: 1e-8\n"),
              "cfg.yaml:3: 'thresholds': unknown key 'level_tol'");
    EXPECT_EQ(message("outptu: x\n"), "cfg.yaml:1: unknown key 'outptu'");
}

TEST(Config, MalformedValuesNameTheField) {
    EXPECT_EQ(message("resolution:\n  base_per_unit: many\n"),
              "cfg.yaml:2: 'resolution.base_per_unit': malformed value 'many'");
    EXPECT_EQ(message("sweep:\n  epsilons: 0.1\n"), "cfg.yaml:2: 'sweep.epsilons': expected a list of numbers");
    EXPECT_EQ(message("family:\n  kind: klein-bottle\n"), "cfg.yaml:2: 'family': unknown family kind 'klein-bottle'");
    EXPECT_NE(message("family: [1, 2\n").find("cfg.yaml:"), std::string::npos);
    EXPECT_EQ(message("flow:\n  function: heat\n"),
              "cfg.yaml:2: 'flow': unknown flow function 'heat' (fiber-sine or eigenmode)");
}

TEST(Config, ThresholdsMustBePositive) {
    EXPECT_THROW(parse_config("thresholds: {lambda_min: 0}\n"), ConfigError);
    EXPECT_THROW(parse_config("thresholds: {dt_factor: -1}\n"), ConfigError);
    EXPECT_THROW(parse_config("spectrum: {theta_max: 0}\n"), ConfigError);
    EXPECT_THROW(parse_config("estimates: {fiber_samples: 4}\n"), ConfigError);
    EXPECT_THROW(parse_config("sweep: {epsilons: [0.1, 1.5, 0.2]}\n"), ConfigError);
    EXPECT_THROW(parse_config("ball: {center: [0.5, 0.5]}\n"), ConfigError);
    EXPECT_THROW(parse_config("family: {epsilon: 0}\n"), PreconditionError);
    EXPECT_THROW(load_config("/nonexistent/config.yaml"), ConfigError);
}
