#include <doctest.h>

#include "helpers.hpp"
#include "socialego/config.hpp"
#include "socialego/errors.hpp"

using namespace socialego;

TEST_SUITE("config") {
  TEST_CASE("defaults describe the full-size model") {
    const ExperimentConfig c;
    CHECK(c.latent_dim == 256);
    CHECK(c.vae_layers == 9);
    CHECK(c.denoiser_layers == 9);
    CHECK(c.heads == 4);
    CHECK(c.frames == 60);
    CHECK(c.fps == 30.0);
    CHECK(c.diffusion_steps == 1000);
    CHECK(c.beta_start == 1e-4);
    CHECK(c.beta_end == 0.02);
    CHECK(c.inference_steps == 20);
    CHECK(c.kl_weight == 1e-4);
    CHECK(c.use_scene);
    CHECK(c.use_interactee);
    CHECK(c.violations().empty());
    CHECK(c.vae_config().ff_hidden == 0);
  }

  TEST_CASE("text round trip") {
    ExperimentConfig c;
    c.seed = 12345678901234ull;
    c.seeds = {3, 4, 5};
    c.scenario = "far-averted";
    c.kappa = 0.1 + 0.2;
    c.vae_lr = 3e-3;
    c.scene_widths = {8, 16};
    c.use_scene = false;
    c.gaze_test = "gaze-vs-gaze";
    const auto back = parse_config(c.to_text());
    CHECK(back == c);
    CHECK(parse_config(back.to_text()).to_text() == c.to_text());
    CHECK(c.to_text().find("fps: 30\n") != std::string::npos);
  }

  TEST_CASE("comments, blank lines and dashed keys") {
    const auto c = parse_config("# comment\n\nlatent_dim: 32   # trailing\nvae_steps: 7\n");
    CHECK(c.latent_dim == 32);
    CHECK(c.vae_steps == 7);
  }

  TEST_CASE("unknown keys and unparsable values are all reported") {
    try {
      parse_config("latent_dim: many\nwhatever: 1\nuse_scene: maybe\n");
      FAIL("no error");
    } catch (const ConfigError& e) {
      CHECK(e.violations().size() == 3);
      const std::string all = e.what();
      for (const char* key : {"latent_dim", "whatever", "use_scene"}) CHECK(all.find(key) != std::string::npos);
    }
  }

  TEST_CASE("range checks list every violated field") {
    const auto c = parse_config("kappa: 2\nheads: 0\nframes: -1\n");
    const auto v = c.violations();
    CHECK(v.size() >= 3);
    std::string all;
    for (const auto& s : v) all += s + "\n";
    for (const char* key : {"kappa", "heads", "frames"}) CHECK(all.find(key) != std::string::npos);
  }

  TEST_CASE("cross-field violations") {
    ExperimentConfig c;
    c.latent_dim = 30;
    c.heads = 4;
    c.inference_steps = 2000;
    c.beta_start = 0.5;
    c.beta_end = 0.1;
    const auto v = c.violations();
    CHECK(v.size() >= 3);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("record length covers the largest offset") {
    ExperimentConfig c;
    c.frames = 60;
    c.condition_offset = 5;
    c.future_offset = 30;
    CHECK(c.record_frames() >= 90);
  }

  TEST_CASE("derived component configs") {
    ExperimentConfig c;
    c.latent_dim = 32;
    c.use_scene = false;
    c.vae_steps = 11;
    CHECK(c.vae_config().latent_dim == 32);
    CHECK(c.vae_train_config(5).steps == 11);
    CHECK(c.vae_train_config(5).seed == 5);
    CHECK_FALSE(c.denoiser_config().use_scene);
    CHECK(c.schedule().T == c.diffusion_steps);
    CHECK(c.scene_encoder_config().out_dim == 32);
  }

  TEST_CASE("load_config reports a missing file") {
    CHECK_THROWS(load_config("/nonexistent/socialego.cfg"));
  }
}
