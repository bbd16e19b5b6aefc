#include <doctest.h>

#include "llambo/llm.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

using namespace llambo;

namespace {

SearchSpace toy_space() {
  SearchSpace s;
  s.params.push_back({"a", ParamKind::integer, 0.0, 10.0, {}, Scale::linear});
  s.params.push_back({"b", ParamKind::continuous, 0.0, 1.0, {}, Scale::linear});
  return s;
}

Task toy_task() {
  Task task;
  task.id = "toy/Toy";
  task.task_card = {"toyset", 100, 4, "4 continuous", "regression", "mse",
                    "A synthetic toy regression set."};
  task.model_card = {"ToyModel", toy_space(), "Two knobs."};
  task.direction = Direction::minimize;
  task.objective = [](const Config& c) {
    return static_cast<double>(std::get<std::int64_t>(c.values.at("a"))) +
           std::get<double>(c.values.at("b"));
  };
  return task;
}

Config toy_config(std::int64_t a, double b) {
  Config c;
  c.values["a"] = a;
  c.values["b"] = b;
  return c;
}

BackendConfig scripted_cfg(int max_retries = 2) {
  BackendConfig cfg;
  cfg.max_retries = max_retries;
  return cfg;
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("history serialization format") {
  SearchSpace space;
  space.params.push_back({"a", ParamKind::integer, 0.0, 10.0, {}, Scale::linear});
  History history;
  history.push_back({toy_config(1, 0.0), 0.123});
  history.back().config.values.erase("b");

  CHECK(serialize_history(space, history, ContextLevel::full) ==
        "performance: 0.123000, hyperparameters: {a: 1}");
  CHECK(serialize_history(space, history, ContextLevel::none) ==
        "performance: 0.123000, hyperparameters: {X1: 1}");
  CHECK(serialize_history(space, {}, ContextLevel::full).empty());

  // Distinct scores at 6 significant digits stay distinct in text.
  History two;
  two.push_back(history[0]);
  two.push_back(history[0]);
  two[1].score = 0.123001;
  const std::string text = serialize_history(space, two, ContextLevel::full);
  CHECK(count_occurrences(text, "0.123000") == 1);
  CHECK(count_occurrences(text, "0.123001") == 1);

  // Mixed parameter kinds render in space order.
  SearchSpace mixed = toy_space();
  mixed.params.push_back({"kernel", ParamKind::categorical, 0.0, 0.0, {"rbf", "poly"},
                          Scale::linear});
  Config c = toy_config(5, 0.001);
  c.values["kernel"] = std::string("rbf");
  CHECK(serialize_history(mixed, {{c, 2.0}}, ContextLevel::full) ==
        "performance: 2.00000, hyperparameters: {a: 5, b: 0.001, kernel: rbf}");
}

TEST_CASE("warmstart prompts expose exactly the context the level allows") {
  const Task& breast = find_task("breast/RandomForest");
  const PromptTemplates& tpl = PromptTemplates::defaults();

  const PromptBundle full = build_warmstart_prompt(breast, ContextLevel::full, {}, tpl);
  CHECK(full.expected_schema == ReplySchema::config);
  CHECK(full.user_text.find("569") != std::string::npos);
  CHECK(full.user_text.find("30") != std::string::npos);
  CHECK(full.user_text.find("breast") != std::string::npos);
  CHECK(full.user_text.find("max_depth") != std::string::npos);
  CHECK(full.user_text.find("Data Card:") != std::string::npos);
  CHECK(full.user_text.find("- description:") != std::string::npos);

  const PromptBundle partial = build_warmstart_prompt(breast, ContextLevel::partial, {}, tpl);
  CHECK(partial.user_text.find("breast") != std::string::npos);
  CHECK(partial.user_text.find("max_depth") != std::string::npos);
  CHECK(partial.user_text.find("- description:") == std::string::npos);

  const PromptBundle none = build_warmstart_prompt(breast, ContextLevel::none, {}, tpl);
  CHECK(none.user_text.find("breast") == std::string::npos);
  CHECK(none.user_text.find("RandomForest") == std::string::npos);
  CHECK(none.user_text.find("Data Card") == std::string::npos);
  for (const ParamSpec& spec : breast.space().params)
    CHECK(none.user_text.find(spec.name) == std::string::npos);
  CHECK(none.user_text.find("X1") != std::string::npos);
  CHECK(none.user_text.find("X4") != std::string::npos);

  // Previously proposed points appear and ask for something different.
  const Task task = toy_task();
  const PromptBundle again =
      build_warmstart_prompt(task, ContextLevel::full, {toy_config(3, 0.25)}, tpl);
  CHECK(again.user_text.find("already suggested") != std::string::npos);
  CHECK(again.user_text.find("{a: 3, b: 0.25}") != std::string::npos);
  CHECK(build_warmstart_prompt(task, ContextLevel::full, {}, tpl)
            .user_text.find("already suggested") == std::string::npos);
}

TEST_CASE("candidate and surrogate prompts embed history and instructions") {
  const Task task = toy_task();
  const PromptTemplates& tpl = PromptTemplates::defaults();
  History history;
  for (int i = 0; i < 3; ++i) history.push_back({toy_config(i, 0.1 * i), 1.0 * i});

  const PromptBundle cand = build_candidate_prompt(task, history, ContextLevel::full, 10, tpl);
  CHECK(cand.expected_schema == ReplySchema::config_list);
  CHECK(cand.user_text.find("10") != std::string::npos);
  CHECK(count_occurrences(cand.user_text, "performance: ") == 3);
  CHECK(cand.user_text.find("mse, lower is better") != std::string::npos);
  CHECK_THROWS_AS(build_candidate_prompt(task, {}, ContextLevel::full, 10, tpl),
                  ValidationError);

  const Config candidate = toy_config(7, 0.5);
  const PromptBundle sur =
      build_surrogate_prompt(task, history, candidate, ContextLevel::full, tpl);
  CHECK(sur.expected_schema == ReplySchema::score);
  CHECK(sur.user_text.find("mse") != std::string::npos);
  // The candidate renders exactly like the hyperparameters part of a history line.
  const std::string line = serialize_history(task.space(), {{candidate, 0.0}},
                                             ContextLevel::full);
  const std::string rendered = line.substr(line.find("hyperparameters: "));
  CHECK(sur.user_text.find(rendered) != std::string::npos);
  CHECK_THROWS_AS(build_surrogate_prompt(task, {}, candidate, ContextLevel::full, tpl),
                  ValidationError);
}

TEST_CASE("template files match the compiled-in defaults") {
  const auto dir = std::filesystem::path(__FILE__).parent_path().parent_path() / "templates";
  REQUIRE(std::filesystem::exists(dir / "system.txt"));
  CHECK(PromptTemplates::load_dir(dir.string()) == PromptTemplates::defaults());
  // A missing directory falls back to the defaults entirely.
  CHECK(PromptTemplates::load_dir("/nonexistent/prompt/dir") == PromptTemplates::defaults());
}

TEST_CASE("strict config parsing") {
  const SearchSpace space = toy_space();

  const ParsedReply ok = parse_response(R"({"a": 5, "b": 0.25})", ReplySchema::config, space);
  CHECK(ok.configs.at(0) == toy_config(5, 0.25));

  // Prose and code fences around the object are tolerated.
  const ParsedReply fenced = parse_response(
      "Sure! Here you go:\n```json\n{\"a\": 5, \"b\": 0.25}\n```\nGood luck!",
      ReplySchema::config, space);
  CHECK(fenced.configs.at(0) == toy_config(5, 0.25));

  // Numeric strings coerce; float-typed integers are accepted when integral.
  CHECK(parse_response(R"({"a": "5", "b": "0.25"})", ReplySchema::config, space).configs.at(0) ==
        toy_config(5, 0.25));
  CHECK(parse_response(R"({"a": 5.0, "b": 0.25})", ReplySchema::config, space).configs.at(0) ==
        toy_config(5, 0.25));

  // Unknown keys are ignored.
  CHECK(parse_response(R"({"a": 5, "b": 0.25, "note": "hi"})", ReplySchema::config, space)
            .configs.at(0) == toy_config(5, 0.25));

  const auto kind_of = [&](const std::string& text) {
    try {
      parse_response(text, ReplySchema::config, space);
    } catch (const ParseError& e) {
      return e.kind();
    }
    throw std::runtime_error("expected a parse error");
  };
  CHECK(kind_of("lets try 100 trees") == ParseErrorKind::format);
  CHECK(kind_of(R"({"a": 5, "b": )") == ParseErrorKind::format);  // unbalanced json
  CHECK(kind_of(R"({"a": 5})") == ParseErrorKind::missing_key);
  CHECK(kind_of(R"({"a": 5, "b": 1.5})") == ParseErrorKind::out_of_bounds);
  CHECK(kind_of(R"({"a": 5.2, "b": 0.5})") == ParseErrorKind::out_of_bounds);
  CHECK(kind_of(R"({"a": true, "b": 0.5})") == ParseErrorKind::format);

  // Error messages name the offending parameter.
  try {
    parse_response(R"({"a": 5, "b": 1.5})", ReplySchema::config, space);
    FAIL("expected out_of_bounds");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("'b'") != std::string::npos);
  }

  SearchSpace cat = toy_space();
  cat.params.push_back({"kernel", ParamKind::categorical, 0.0, 0.0, {"rbf", "poly"},
                        Scale::linear});
  CHECK_THROWS_AS(
      parse_response(R"({"a": 1, "b": 0.5, "kernel": "sigmoid"})", ReplySchema::config, cat),
      ParseError);
  CHECK_THROWS_AS(parse_response(R"({"a": 1, "b": 0.5, "kernel": 3})", ReplySchema::config, cat),
                  ParseError);
}

TEST_CASE("config list parsing enforces arity strictly") {
  const SearchSpace space = toy_space();
  const std::string two = R"([{"a": 1, "b": 0.1}, {"a": 2, "b": 0.2}])";

  const ParsedReply ok = parse_response(two, ReplySchema::config_list, space, 2);
  REQUIRE(ok.configs.size() == 2);
  CHECK(ok.configs[1] == toy_config(2, 0.2));

  CHECK_THROWS_AS(parse_response(two, ReplySchema::config_list, space, 3), ParseError);
  try {
    parse_response(two, ReplySchema::config_list, space, 3);
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::arity);
  }
  try {
    parse_response(R"([{"a": 1, "b": 0.1}, {"a": 2}])", ReplySchema::config_list, space, 2);
    FAIL("expected error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::missing_key);
    CHECK(std::string(e.what()).find("entry 1") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_response("no array here", ReplySchema::config_list, space, 2),
                  ParseError);
}

TEST_CASE("score parsing accepts bare numbers and score objects") {
  const SearchSpace space = toy_space();
  CHECK(parse_response("0.85", ReplySchema::score, space).score == 0.85);
  CHECK(parse_response("  0.85\n", ReplySchema::score, space).score == 0.85);
  CHECK(parse_response("-1.25e-2", ReplySchema::score, space).score == -0.0125);
  CHECK(parse_response(R"({"score": 0.9})", ReplySchema::score, space).score == 0.9);
  CHECK(parse_response(R"(I estimate {"score": "0.9"} roughly)", ReplySchema::score, space)
            .score == 0.9);
  CHECK_THROWS_AS(parse_response("it will do great", ReplySchema::score, space), ParseError);
  CHECK_THROWS_AS(parse_response("about 0.9 I think", ReplySchema::score, space), ParseError);
}

TEST_CASE("lenient list parsing salvages what it can") {
  const SearchSpace space = toy_space();

  const LenientConfigList full = parse_config_list_lenient(
      R"([{"a": 1, "b": 0.1}, {"a": 2, "b": 0.2}, {"a": 3, "b": 0.3}])", space, 10);
  CHECK(full.found_array);
  CHECK(full.valid.size() == 3);
  CHECK(full.invalid == 0);

  const LenientConfigList partial = parse_config_list_lenient(
      R"([{"a": 1, "b": 0.1}, {"a": 2, "b": 5.0}, {"a": 3, "b": 0.3}, "junk"])", space, 10);
  CHECK(partial.found_array);
  CHECK(partial.valid.size() == 2);
  CHECK(partial.invalid == 2);
  CHECK(partial.first_error.find("'b'") != std::string::npos);

  // Loose objects are salvaged when no array is present.
  const LenientConfigList loose = parse_config_list_lenient(
      R"(first {"a": 1, "b": 0.1} and then {"a": 2, "b": 0.2})", space, 10);
  CHECK(!loose.found_array);
  CHECK(loose.valid.size() == 2);

  // Objects nested inside an accepted config are not double-counted.
  const LenientConfigList nested = parse_config_list_lenient(
      R"({"a": 1, "b": 0.1, "alt": {"a": 2, "b": 0.2}})", space, 10);
  CHECK(nested.valid.size() == 1);
  CHECK(nested.valid[0] == toy_config(1, 0.1));

  CHECK(parse_config_list_lenient("nothing at all", space, 10).valid.empty());
  CHECK(parse_config_list_lenient(
            R"([{"a": 1, "b": 0.1}, {"a": 2, "b": 0.2}])", space, 1)
            .valid.size() == 1);
}

TEST_CASE("scripted backend replays, counts, and exhausts") {
  ScriptedBackend backend({"one", "two"}, false);
  const PromptBundle bundle;
  CHECK(backend.complete(bundle, 0.7, 1) == "one");
  CHECK(backend.complete(bundle, 0.0, 2) == "two");
  CHECK(backend.calls() == 2);
  CHECK_THROWS_AS(backend.complete(bundle, 0.0, 3), BackendError);

  ScriptedBackend cycling({"only"}, true);
  CHECK(cycling.complete(bundle, 0.0, 1) == "only");
  CHECK(cycling.complete(bundle, 0.0, 2) == "only");

  const auto path = std::filesystem::temp_directory_path() / "llambo_replies_test.json";
  {
    std::ofstream out(path);
    out << R"({"replies": ["alpha", "beta"], "cycle": false})";
  }
  ScriptedBackend loaded = ScriptedBackend::from_file(path.string());
  CHECK(loaded.complete(bundle, 0.0, 1) == "alpha");
  std::filesystem::remove(path);

  CHECK_THROWS_AS(ScriptedBackend::from_file("/nonexistent.json"), ValidationError);

  BackendConfig cfg;
  cfg.scripted_replies = "/nonexistent.json";
  CHECK_THROWS_AS(make_backend(cfg), ValidationError);
  cfg.scripted_replies.clear();
  cfg.max_retries = -1;
  CHECK_THROWS_AS(make_backend(cfg), ValidationError);
}

TEST_CASE("http backend speaks the completion protocol") {
  httplib::Server server;
  nlohmann::json seen_body;
  std::atomic<int> status{200};
  server.Post("/api/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = nlohmann::json::parse(req.body);
    res.status = status.load();
    res.set_content(R"({"response": "{\"a\": 5, \"b\": 0.25}"})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serve([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "test-model";
  HttpBackend backend(cfg);

  PromptBundle bundle;
  bundle.system_text = "sys";
  bundle.user_text = "hello";
  const std::string reply = backend.complete(bundle, 0.3, 42);
  CHECK(reply == R"({"a": 5, "b": 0.25})");
  CHECK(seen_body["model"] == "test-model");
  CHECK(seen_body["system"] == "sys");
  CHECK(seen_body["prompt"] == "hello");
  CHECK(seen_body["stream"] == false);
  CHECK(seen_body["options"]["temperature"] == 0.3);
  CHECK(seen_body["options"]["seed"] == 42);

  status = 500;
  try {
    backend.complete(bundle, 0.3, 42);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status() == 500);
  }

  server.stop();
  serve.join();

  BackendConfig dead = cfg;
  dead.endpoint = "http://127.0.0.1:1";
  dead.timeout_seconds = 1;
  HttpBackend unreachable(dead);
  CHECK_THROWS_AS(unreachable.complete(bundle, 0.3, 42), BackendError);
}

TEST_CASE("robust_ask retries with corrective prompts and falls back") {
  const Task task = toy_task();
  const SearchSpace space = toy_space();
  const PromptBundle bundle =
      build_warmstart_prompt(task, ContextLevel::full, {}, PromptTemplates::defaults());
  const FallbackFn fallback = [&space](std::uint64_t s) {
    ParsedReply reply;
    reply.configs = sample_random(space, 1, s);
    return reply;
  };

  {
    ScriptedBackend backend({"prose", R"({"a": 5, "b": 9.0})", R"({"a": 5, "b": 0.5})"});
    std::vector<LlmExchange> log;
    const RobustResult rr = robust_ask(backend, scripted_cfg(2), bundle, space, "warmstart",
                                       0.7, -1, fallback, 31, &log);
    CHECK(!rr.fallback);
    CHECK(rr.retries == 2);
    CHECK(rr.reply.configs.at(0) == toy_config(5, 0.5));
    REQUIRE(log.size() == 3);
    CHECK(!log[0].ok);
    CHECK(!log[1].ok);
    CHECK(log[2].ok);
    CHECK(log[0].attempt == 0);
    CHECK(log[2].attempt == 2);
    // Each retry prompt quotes the previous error verbatim.
    CHECK(log[1].user_text.find(log[0].error) != std::string::npos);
    CHECK(log[2].user_text.find(log[1].error) != std::string::npos);
    CHECK(log[1].error.find("'b'") != std::string::npos);
  }

  {
    ScriptedBackend backend({"bad", "worse", "worst", "never asked"});
    std::vector<LlmExchange> log;
    const RobustResult rr = robust_ask(backend, scripted_cfg(2), bundle, space, "warmstart",
                                       0.7, -1, fallback, 31, &log);
    CHECK(backend.calls() == 3);  // at most max_retries + 1 backend calls
    CHECK(rr.fallback);
    CHECK(rr.retries == 2);
    validate_config(space, rr.reply.configs.at(0));
    CHECK(log.size() == 3);
    CHECK(log.back().fallback);
    // Deterministic: the fallback config depends only on the seed.
    ScriptedBackend backend2({"bad", "worse", "worst"});
    const RobustResult rr2 = robust_ask(backend2, scripted_cfg(2), bundle, space, "warmstart",
                                        0.7, -1, fallback, 31, nullptr);
    CHECK(rr2.reply.configs.at(0) == rr.reply.configs.at(0));
  }
}

TEST_CASE("llm warmstart proposes sequentially with duplicate tracking") {
  const Task task = toy_task();
  const PromptTemplates& tpl = PromptTemplates::defaults();

  {
    ScriptedBackend backend({R"({"a": 1, "b": 0.1})", R"({"a": 2, "b": 0.2})",
                             R"({"a": 3, "b": 0.3})"});
    std::vector<LlmExchange> log;
    const WarmstartResult ws = llm_warmstart(backend, scripted_cfg(0), task, ContextLevel::full,
                                             3, 7, tpl, &log);
    REQUIRE(ws.configs.size() == 3);
    CHECK(ws.configs[0] == toy_config(1, 0.1));
    CHECK(ws.configs[2] == toy_config(3, 0.3));
    CHECK(ws.duplicate == std::vector<bool>{false, false, false});
    CHECK(ws.fallback == std::vector<bool>{false, false, false});
    CHECK(ws.retries == 0);
    // Later prompts list earlier proposals.
    CHECK(log[0].user_text.find("already suggested") == std::string::npos);
    CHECK(log[1].user_text.find("{a: 1, b: 0.1}") != std::string::npos);
    CHECK(log[2].user_text.find("{a: 2, b: 0.2}") != std::string::npos);
  }

  {
    ScriptedBackend backend({R"({"a": 1, "b": 0.1})", R"({"a": 1, "b": 0.1})"});
    const WarmstartResult ws = llm_warmstart(backend, scripted_cfg(0), task, ContextLevel::full,
                                             2, 7, tpl, nullptr);
    CHECK(ws.duplicate == std::vector<bool>{false, true});
  }

  {
    // Every reply malformed: all five points fall back to valid random configs.
    ScriptedBackend backend(std::vector<std::string>(5, "nope"));
    const WarmstartResult ws = llm_warmstart(backend, scripted_cfg(0), task, ContextLevel::full,
                                             5, 7, tpl, nullptr);
    CHECK(ws.configs.size() == 5);
    CHECK(ws.fallback == std::vector<bool>(5, true));
    for (const Config& c : ws.configs) validate_config(task.space(), c);
  }

  {
    // Level none: replies use aliased names; results carry real names.
    ScriptedBackend backend({R"({"X1": 4, "X2": 0.4})"});
    const WarmstartResult ws = llm_warmstart(backend, scripted_cfg(0), task, ContextLevel::none,
                                             1, 7, tpl, nullptr);
    CHECK(ws.configs.at(0) == toy_config(4, 0.4));
  }
}

TEST_CASE("llm_propose salvages, tops up, and falls back") {
  const Task task = toy_task();
  const PromptTemplates& tpl = PromptTemplates::defaults();
  History history{{toy_config(1, 0.1), 1.1}};

  {
    ScriptedBackend backend(
        {R"([{"a": 1, "b": 0.1}, {"a": 2, "b": 0.2}, {"a": 3, "b": 0.3}])"});
    const ProposeResult pr = llm_propose(backend, scripted_cfg(), task, history,
                                         ContextLevel::full, 3, 11, tpl, nullptr);
    CHECK(pr.batch.configs.size() == 3);
    CHECK(pr.batch.provenance == Provenance::llm);
    CHECK(pr.topped_up == 0);
    CHECK(pr.invalid == 0);
    CHECK(!pr.fallback);
  }

  {
    // 2 valid of 5 requested, 2 invalid entries: 3 random top-ups.
    ScriptedBackend backend(
        {R"([{"a": 1, "b": 0.1}, {"a": 99, "b": 0.2}, {"a": 2}, {"a": 2, "b": 0.2}])"});
    std::vector<LlmExchange> log;
    const ProposeResult pr = llm_propose(backend, scripted_cfg(), task, history,
                                         ContextLevel::full, 5, 11, tpl, &log);
    CHECK(pr.batch.configs.size() == 5);
    CHECK(pr.invalid == 2);
    CHECK(pr.topped_up == 3);
    CHECK(!pr.fallback);
    CHECK(pr.batch.provenance == Provenance::llm);
    CHECK(backend.calls() == 1);  // single query, no retries
    for (const Config& c : pr.batch.configs) validate_config(task.space(), c);
    CHECK(log.size() == 1);
    CHECK(log[0].stage == "candidates");
  }

  {
    ScriptedBackend backend({"no configurations today"});
    const ProposeResult pr = llm_propose(backend, scripted_cfg(), task, history,
                                         ContextLevel::full, 4, 11, tpl, nullptr);
    CHECK(pr.batch.configs.size() == 4);
    CHECK(pr.fallback);
    CHECK(pr.topped_up == 4);
    CHECK(pr.batch.provenance == Provenance::random);
    for (const Config& c : pr.batch.configs) validate_config(task.space(), c);
  }

  {
    // Backend failure (exhausted queue) degrades to a full random batch.
    ScriptedBackend backend({});
    const ProposeResult pr = llm_propose(backend, scripted_cfg(), task, history,
                                         ContextLevel::full, 4, 11, tpl, nullptr);
    CHECK(pr.batch.configs.size() == 4);
    CHECK(pr.fallback);
  }

  CHECK_THROWS_AS(llm_propose(*make_backend(scripted_cfg()), scripted_cfg(), task, {},
                              ContextLevel::full, 4, 11, tpl, nullptr),
                  ValidationError);
}

TEST_CASE("llm surrogate aggregates Monte Carlo samples") {
  const Task task = toy_task();
  const PromptTemplates& tpl = PromptTemplates::defaults();
  History history{{toy_config(1, 0.1), 0.5}, {toy_config(2, 0.2), 0.7}};
  const Config candidate = toy_config(5, 0.5);

  {
    ScriptedBackend backend({"0.8", "0.9"});
    const SurrogateResult sr =
        llm_surrogate_predict(backend, scripted_cfg(0), task, history, candidate,
                              ContextLevel::full, 2, 13, tpl, nullptr);
    CHECK(sr.pred.mean == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(sr.pred.std == doctest::Approx(0.07071067811865475).epsilon(1e-9));
    CHECK(sr.fallbacks == 0);
  }

  {
    ScriptedBackend backend({"0.8"});
    const SurrogateResult sr =
        llm_surrogate_predict(backend, scripted_cfg(0), task, history, candidate,
                              ContextLevel::full, 1, 13, tpl, nullptr);
    CHECK(sr.pred.mean == 0.8);
    CHECK(sr.pred.std == kSingleShotPriorStd);
  }

  {
    // One malformed sample of three is replaced by the history mean (0.6).
    ScriptedBackend backend({"0.8", "hmm", "0.9"});
    std::vector<LlmExchange> log;
    const SurrogateResult sr =
        llm_surrogate_predict(backend, scripted_cfg(0), task, history, candidate,
                              ContextLevel::full, 3, 13, tpl, &log);
    CHECK(sr.fallbacks == 1);
    CHECK(sr.pred.mean == doctest::Approx((0.8 + 0.6 + 0.9) / 3.0).epsilon(1e-12));
    CHECK(log.size() == 3);
    CHECK(log[1].fallback);
  }

  {
    // Identical samples floor the std instead of reporting zero.
    ScriptedBackend backend({"0.8", "0.8", "0.8"});
    const SurrogateResult sr =
        llm_surrogate_predict(backend, scripted_cfg(0), task, history, candidate,
                              ContextLevel::full, 3, 13, tpl, nullptr);
    CHECK(sr.pred.std == 1e-6);
  }

  CHECK_THROWS_AS(llm_surrogate_predict(*make_backend(scripted_cfg()), scripted_cfg(), task,
                                        history, candidate, ContextLevel::full, 0, 13, tpl,
                                        nullptr),
                  ValidationError);
}
