// Thin Python surface over the core: metrics, cleaning, ranking, and the
// headless pipeline. Structured results cross as plain dicts via JSON.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aquadapt/corpus.hpp"
#include "aquadapt/error.hpp"
#include "aquadapt/evalnlg.hpp"
#include "aquadapt/judgebench.hpp"
#include "aquadapt/relevance.hpp"
#include "aquadapt/service.hpp"
#include "aquadapt/tokenizer.hpp"

namespace py = pybind11;
using namespace aquadapt;

namespace {

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

GoldStandard gold_of(const std::vector<int>& scores) {
    GoldStandard g;
    for (std::size_t i = 0; i < scores.size(); ++i) g.entries.emplace_back(std::to_string(i), scores[i]);
    return g;
}

}  // namespace

PYBIND11_MODULE(_aquadapt, m) {
    static py::exception<Error> error_type(m, "AquadaptError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::handle(error_type.ptr())(std::string(error_code_name(e.code())) + ": " + e.what());
            exc.attr("code") = std::string(error_code_name(e.code()));
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    m.def("tokenize", &tokenize, py::arg("text"));

    m.def("clean_text", [](const std::string& raw) {
        auto r = clean_text(raw);
        return py::make_tuple(r.text, r.applied_rules);
    }, py::arg("raw"));

    m.def("bm25_scores",
          [](const std::vector<std::pair<std::string, std::string>>& docs, const std::vector<std::string>& query,
             double k1, double b) {
              auto index = Bm25Index::build(docs);
              AquaQuery q;
              for (const auto& t : query) q.terms.insert(t);
              Bm25Params params;
              params.k1 = k1;
              params.b = b;
              std::map<std::string, double> out;
              for (const auto& [id, text] : docs) out[id] = bm25_score(id, q, index, params);
              return out;
          },
          py::arg("docs"), py::arg("query"), py::arg("k1") = 1.5, py::arg("b") = 0.75);

    m.def("judge_report",
          [](const std::vector<int>& gold, const std::vector<int>& judge, const std::string& label) {
              JudgeRun run{label, {}};
              for (std::size_t i = 0; i < judge.size(); ++i) run.scores.emplace_back(std::to_string(i), judge[i]);
              return to_python(Json(benchmark_judge(gold_of(gold), run)));
          },
          py::arg("gold"), py::arg("judge"), py::arg("label") = "judge");

    m.def("bleu4",
          [](const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, const std::string& smoothing) {
              return bleu4(hyps, refs, parse_smoothing(smoothing));
          },
          py::arg("hypotheses"), py::arg("references"), py::arg("smoothing") = "add_one");

    m.def("rouge_n", [](const Tokens& h, const Tokens& r, int n) {
        auto s = rouge_n(h, r, n);
        return py::make_tuple(s.precision, s.recall, s.f1);
    }, py::arg("hypothesis"), py::arg("reference"), py::arg("n"));

    m.def("rouge_l", [](const Tokens& h, const Tokens& r) {
        auto s = rouge_l(h, r);
        return py::make_tuple(s.precision, s.recall, s.f1);
    }, py::arg("hypothesis"), py::arg("reference"));

    m.def("evaluate",
          [](const std::vector<std::pair<std::string, std::string>>& pairs, const std::string& smoothing) {
              std::vector<EvalSample> samples;
              for (std::size_t i = 0; i < pairs.size(); ++i)
                  samples.push_back({std::to_string(i), pairs[i].first, pairs[i].second});
              return to_python(Json(evaluate_corpus(samples, parse_smoothing(smoothing))));
          },
          py::arg("pairs"), py::arg("smoothing") = "add_one");

    m.def("run_all",
          [](const std::string& config, std::optional<std::string> storage, std::optional<std::uint64_t> seed) {
              auto cfg = load_config(config);
              if (storage) cfg.storage = std::filesystem::absolute(*storage);
              if (seed) cfg.apply_seed(*seed);
              py::gil_scoped_release release;
              Pipeline pipeline(cfg);
              auto manifest = pipeline.run_all();
              py::gil_scoped_acquire acquire;
              return to_python(Json(manifest));
          },
          py::arg("config"), py::arg("storage") = py::none(), py::arg("seed") = py::none());
}
