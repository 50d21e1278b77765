#include <gtest/gtest.h>

#include <sstream>

#include "mmmem/config.hpp"
#include "mmmem/error.hpp"
#include "synthetic.hpp"

using namespace mmmem;

TEST(Config, Defaults) {
    const EngineConfig c;
    EXPECT_EQ(c.retrieval.gamma, 0.72);
    EXPECT_EQ(c.retrieval.top_k_sym, 5u);
    EXPECT_EQ(c.retrieval.top_k_epi, 2u);
    EXPECT_EQ(c.retrieval.top_k_sen, 1u);
    EXPECT_EQ(c.retrieval.patience, 2u);
    EXPECT_EQ(c.retrieval.epsilon_h, 0.01);
    EXPECT_EQ(c.policy.beta1, 0.1);
    EXPECT_EQ(c.policy.beta2, 0.3);
    EXPECT_EQ(c.policy.clip_epsilon, 0.2);
    EXPECT_EQ(c.policy.kl_penalty_coef, 0.1);
    EXPECT_EQ(c.policy.group_size, 8u);
    EXPECT_EQ(c.sensory.min_sep_frames, 12u);
    EXPECT_EQ(c.sensory.half_width, 4u);
    EXPECT_EQ(c.segment_frames, 300u);
    EXPECT_EQ(c.thresholds.merge, 0.85);
    EXPECT_EQ(c.thresholds.discard, 0.30);
    EXPECT_EQ(c.schema.merge_threshold, 0.90);
}

TEST(Config, ParsesKeysAndComments) {
    std::stringstream in("# engine\ngamma = 0.5\n\ntop_k_sym=3 # fewer\ncluster_k=0\ndistance_mode=gray\nseed=9\n");
    const auto c = parse_config(in);
    EXPECT_EQ(c.retrieval.gamma, 0.5);
    EXPECT_EQ(c.retrieval.top_k_sym, 3u);
    EXPECT_FALSE(c.cluster_k.has_value());
    EXPECT_EQ(c.sensory.distance_mode, DistanceMode::Grayscale);
    EXPECT_EQ(c.seed, 9u);
}

TEST(Config, RejectsBadInput) {
    for (const char* text : {"nonsense=1\n", "gamma\n", "gamma=abc\n", "group_size=1\n", "clip_epsilon=1.5\n",
                             "gamma=1\ngamma=2\n", "theta_merge=0.2\ntheta_discard=0.5\n", "distance_mode=hsv\n",
                             "top_k_sym=-1\n", "toy_vocab=5\ntoy_window=5\n"}) {
        std::stringstream in(text);
        EXPECT_THROW(parse_config(in), ParseError) << text;
    }
}

TEST(Config, WriteParseRoundTrip) {
    std::stringstream in("gamma=0.6\nbeta1=0.5\ncluster_k=4\nepochs=10\n");
    const auto c = parse_config(in);
    std::stringstream out;
    write_config(out, c);
    const auto back = parse_config(out);
    EXPECT_EQ(back.to_map(), c.to_map());
    EXPECT_EQ(back.cluster_k, std::optional<std::size_t>(4));
}

TEST(Config, MissingFileIsIoError) {
    EXPECT_THROW(load_config("/nonexistent/mmmem.cfg"), IoError);
}
