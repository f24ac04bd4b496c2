#include "aquadapt/taxonomy.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

#include "aquadapt/error.hpp"
#include "aquadapt/tokenizer.hpp"

namespace aquadapt {

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t count = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

}  // namespace

const Category* Taxonomy::find(std::string_view category_id) const {
    auto it = std::find_if(categories.begin(), categories.end(),
                           [&](const Category& c) { return c.id == category_id; });
    return it == categories.end() ? nullptr : &*it;
}

Category* Taxonomy::find(std::string_view category_id) {
    return const_cast<Category*>(std::as_const(*this).find(category_id));
}

std::vector<std::string> validate_template(const PromptTemplate& tmpl) {
    std::vector<std::string> problems;
    if (tmpl.fewshot_slot_count < 1) {
        problems.push_back("fewshot_slot_count must be >= 1");
    }
    auto placeholders = count_occurrences(tmpl.instruction_text, kCategoryPlaceholder);
    if (placeholders != 1) {
        problems.push_back(fmt::format("instruction_text must contain '{}' exactly once (found {})",
                                       kCategoryPlaceholder, placeholders));
    }
    return problems;
}

std::vector<std::string> validate_taxonomy(const Taxonomy& taxonomy, bool strict) {
    std::vector<std::string> problems;
    if (taxonomy.categories.empty()) {
        problems.push_back("taxonomy has no categories");
    }
    std::set<std::string> ids;
    std::set<std::string> names;
    for (const auto& category : taxonomy.categories) {
        auto label = category.id.empty() ? category.name : category.id;
        if (category.id.empty()) {
            problems.push_back(fmt::format("category '{}' has an empty id", category.name));
        } else if (!ids.insert(category.id).second) {
            problems.push_back(fmt::format("duplicate category id '{}'", category.id));
        }
        if (category.name.empty()) {
            problems.push_back(fmt::format("category '{}' has an empty name", label));
        }
        names.insert(category.name);
        if (category.seeds.empty()) {
            problems.push_back(fmt::format("category '{}' has no seed pairs", label));
        }
        for (std::size_t i = 0; i < category.seeds.size(); ++i) {
            const auto& seed = category.seeds[i];
            if (trim(seed.question).empty() || trim(seed.answer).empty()) {
                problems.push_back(
                    fmt::format("category '{}' seed {} has an empty question or answer", label, i));
            }
        }
        for (const auto& problem : validate_template(category.prompt_template)) {
            problems.push_back(fmt::format("category '{}' prompt_template: {}", label, problem));
        }
    }
    if (strict) {
        for (auto canonical : kCanonicalCategories) {
            if (names.count(std::string(canonical)) == 0) {
                problems.push_back(fmt::format("missing category '{}'", canonical));
            }
        }
        for (const auto& name : names) {
            if (std::find(kCanonicalCategories.begin(), kCanonicalCategories.end(), name) ==
                kCanonicalCategories.end()) {
                problems.push_back(fmt::format("unexpected category '{}'", name));
            }
        }
        if (taxonomy.categories.size() != kCanonicalCategories.size()) {
            problems.push_back(fmt::format("strict mode expects {} categories, found {}",
                                           kCanonicalCategories.size(),
                                           taxonomy.categories.size()));
        }
    }
    return problems;
}

Taxonomy parse_taxonomy(const Json& document, bool strict) {
    Taxonomy taxonomy;
    try {
        taxonomy = document.get<Taxonomy>();
    } catch (const Json::exception& e) {
        fail(ErrorCode::ParseError, std::string("taxonomy: ") + e.what());
    }
    auto problems = validate_taxonomy(taxonomy, strict);
    if (!problems.empty()) {
        std::string message = "invalid taxonomy:";
        for (const auto& p : problems) {
            message += "\n  - " + p;
        }
        fail(ErrorCode::ValidationError, message);
    }
    return taxonomy;
}

Taxonomy load_taxonomy(const std::filesystem::path& path, bool strict) {
    Json document;
    try {
        document = Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return parse_taxonomy(document, strict);
}

void save_taxonomy(const std::filesystem::path& path, const Taxonomy& taxonomy) {
    write_text_file(path, Json(taxonomy).dump(2) + "\n");
}

AquaQuery default_query(const Taxonomy& taxonomy) {
    AquaQuery query;
    auto add = [&](std::string_view text) {
        for (auto& token : word_tokens(text)) {
            if (stop_words().count(token) == 0) {
                query.terms.insert(std::move(token));
            }
        }
    };
    for (const auto& category : taxonomy.categories) {
        add(category.name);
        for (const auto& sub : category.subcategories) {
            add(sub);
        }
    }
    return query;
}

void to_json(Json& j, const SeedPair& seed) {
    j = Json{{"question", seed.question}, {"answer", seed.answer}, {"author", seed.author}};
}

void from_json(const Json& j, SeedPair& seed) {
    seed.question = j.at("question").get<std::string>();
    seed.answer = j.at("answer").get<std::string>();
    seed.author = j.value("author", "");
}

void to_json(Json& j, const PromptTemplate& tmpl) {
    j = Json{{"system_text", tmpl.system_text},
             {"fewshot_slot_count", tmpl.fewshot_slot_count},
             {"instruction_text", tmpl.instruction_text}};
}

void from_json(const Json& j, PromptTemplate& tmpl) {
    tmpl.system_text = j.value("system_text", "");
    tmpl.fewshot_slot_count = j.value("fewshot_slot_count", 1);
    tmpl.instruction_text = j.at("instruction_text").get<std::string>();
}

void to_json(Json& j, const Category& category) {
    j = Json{{"id", category.id},
             {"name", category.name},
             {"subcategories", category.subcategories},
             {"prompt_template", category.prompt_template},
             {"seeds", category.seeds}};
}

void from_json(const Json& j, Category& category) {
    category.id = j.at("id").get<std::string>();
    category.name = j.at("name").get<std::string>();
    category.subcategories = j.value("subcategories", std::vector<std::string>{});
    category.prompt_template = j.at("prompt_template").get<PromptTemplate>();
    category.seeds = j.value("seeds", std::vector<SeedPair>{});
}

void to_json(Json& j, const Taxonomy& taxonomy) {
    j = Json{{"version", taxonomy.version}, {"categories", taxonomy.categories}};
}

void from_json(const Json& j, Taxonomy& taxonomy) {
    taxonomy.version = j.value("version", std::int64_t{1});
    taxonomy.categories = j.at("categories").get<std::vector<Category>>();
}

}  // namespace aquadapt
