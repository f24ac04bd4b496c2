#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "aquadapt/jsonl.hpp"
#include "aquadapt/relevance.hpp"

namespace aquadapt {

/// Substituted with the category name when a prompt is assembled.
inline constexpr std::string_view kCategoryPlaceholder = "{category}";

/// The eleven top-level categories enforced in strict mode.
inline constexpr std::array<std::string_view, 11> kCanonicalCategories = {
    "Production Systems and Infrastructure",
    "Genetics, Breeding, and Biotechnology",
    "Larval and Hatchery Management",
    "Nutrition, Feeding, and Feed Technology",
    "Water Quality and Environmental Control",
    "Health and Disease Management",
    "Sustainability, Ecology, and Environmental Impact",
    "Technology, Innovation, and IoT Applications",
    "Economics, Policy, Marketing, and Governance",
    "Species-Specific Culture Practices",
    "Post-Harvest Handling, Processing, and Food Safety",
};

struct SeedPair {
    std::string question;
    std::string answer;
    std::string author;

    friend bool operator==(const SeedPair&, const SeedPair&) = default;
};

struct PromptTemplate {
    std::string system_text;
    int fewshot_slot_count = 1;
    std::string instruction_text;

    friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

struct Category {
    std::string id;
    std::string name;
    std::vector<std::string> subcategories;
    PromptTemplate prompt_template;
    std::vector<SeedPair> seeds;

    friend bool operator==(const Category&, const Category&) = default;
};

struct Taxonomy {
    std::int64_t version = 1;
    std::vector<Category> categories;

    const Category* find(std::string_view category_id) const;
    Category* find(std::string_view category_id);

    friend bool operator==(const Taxonomy&, const Taxonomy&) = default;
};

/// Every violated invariant, one message each. Empty means valid.
std::vector<std::string> validate_taxonomy(const Taxonomy& taxonomy, bool strict);
std::vector<std::string> validate_template(const PromptTemplate& tmpl);

/// Parses and validates; throws ValidationError listing all violations.
Taxonomy parse_taxonomy(const Json& document, bool strict);
Taxonomy load_taxonomy(const std::filesystem::path& path, bool strict);
void save_taxonomy(const std::filesystem::path& path, const Taxonomy& taxonomy);

/// Union of tokenized category and subcategory names, stop words removed.
AquaQuery default_query(const Taxonomy& taxonomy);

void to_json(Json& j, const SeedPair& seed);
void from_json(const Json& j, SeedPair& seed);
void to_json(Json& j, const PromptTemplate& tmpl);
void from_json(const Json& j, PromptTemplate& tmpl);
void to_json(Json& j, const Category& category);
void from_json(const Json& j, Category& category);
void to_json(Json& j, const Taxonomy& taxonomy);
void from_json(const Json& j, Taxonomy& taxonomy);

}  // namespace aquadapt
