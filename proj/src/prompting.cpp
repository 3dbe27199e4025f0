#include "nameprobe/prompting.hpp"

#include <algorithm>
#include <span>

namespace nameprobe {
namespace {

constexpr std::string_view kIsoTail[] = {"represented by its ISO 3166-1 alpha-3 ",
                                         "code (e.g., 'USA', 'GBR')."};
constexpr std::string_view kIsoTailAlso[] = {"represented by its ISO 3166-1 alpha-3 ", "code."};

// Wrapped request-list item for a field. The first line follows "N. ",
// continuation lines are indented by four spaces.
std::vector<std::string_view> item_lines(FieldKind kind, bool after_other_iso_field) {
  switch (kind) {
    case FieldKind::country_of_origin:
      if (after_other_iso_field) {
        return {"The most likely country of origin, also ", kIsoTailAlso[0], kIsoTailAlso[1]};
      }
      return {"The most likely country of origin, ", kIsoTail[0], kIsoTail[1]};
    case FieldKind::nationality:
      if (after_other_iso_field) {
        return {"The most likely nationality, also ", kIsoTailAlso[0], kIsoTailAlso[1]};
      }
      return {"The most likely nationality, ", kIsoTail[0], kIsoTail[1]};
    case FieldKind::gender:
      return {"The gender of the person, reported ", "as 'M' for male or 'F' for female."};
    case FieldKind::race:
      return {"The race of the person, choosing ", "from one of the following categories: ",
              "['Hispanic', 'White, Not Hispanic', ", "'Black, Not Hispanic', 'Other', ",
              "'Asian Or Pacific Islander']."};
    case FieldKind::ethnicity:
      return {"The most likely ethnicity of the person, ",
              "described in a few words of free text."};
    case FieldKind::birth_date:
      return {"The estimated birth date, provided ", "in the format 'mm/dd/yyyy'."};
    case FieldKind::age:
      return {"The estimated age of the person in years, ", "provided as a whole number."};
  }
  return {};
}

std::string_view format_placeholder(FieldKind kind) {
  switch (format_of(kind)) {
    case FieldFormat::iso3: return "[ISO3 code]";
    case FieldFormat::m_or_f: return "[M/F]";
    case FieldFormat::race5_enum: return "[Race Category]";
    case FieldFormat::free_text: return "[free text]";
    case FieldFormat::mmddyyyy: return "[mm/dd/yyyy]";
    case FieldFormat::integer_years: return "[integer]";
  }
  return "";
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool is_blank(std::string_view name) { return trim(name).empty(); }

}  // namespace

void FieldProfile::validate() const {
  if (fields.empty()) throw InvalidProfile("profile '" + name + "' requests no fields");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    for (std::size_t j = i + 1; j < fields.size(); ++j) {
      if (fields[i] == fields[j]) {
        throw InvalidProfile("profile '" + name + "' lists " + std::string(key_of(fields[i])) +
                             " twice");
      }
    }
  }
  if (template_text && count_occurrences(*template_text, kNamePlaceholder) != 1) {
    throw InvalidProfile("template for profile '" + name +
                         "' must contain exactly one {fullname} placeholder");
  }
}

bool FieldProfile::contains(FieldKind kind) const {
  return std::find(fields.begin(), fields.end(), kind) != fields.end();
}

FieldProfile complex_profile() {
  return {"complex",
          {FieldKind::country_of_origin, FieldKind::nationality, FieldKind::gender,
           FieldKind::race, FieldKind::birth_date},
          std::nullopt};
}

FieldProfile simple_profile() {
  return {"simple", {FieldKind::nationality, FieldKind::gender}, std::nullopt};
}

FieldProfile voter_profile() {
  return {"voter", {FieldKind::gender, FieldKind::race, FieldKind::birth_date}, std::nullopt};
}

FieldProfile hong_kong_profile() {
  return {"hong_kong",
          {FieldKind::nationality, FieldKind::country_of_origin, FieldKind::ethnicity,
           FieldKind::gender, FieldKind::age},
          std::nullopt};
}

std::optional<FieldProfile> builtin_profile(std::string_view name) {
  if (name == "complex") return complex_profile();
  if (name == "simple") return simple_profile();
  if (name == "voter") return voter_profile();
  if (name == "hong_kong") return hong_kong_profile();
  return std::nullopt;
}

std::string prompt_template(const FieldProfile& profile) {
  profile.validate();
  if (profile.template_text) return *profile.template_text;

  std::string out =
      "Given the full name of a person: \n"
      "{fullname}, please determine\n"
      "the following details:\n"
      "        \n";
  bool seen_iso_field = false;
  for (std::size_t i = 0; i < profile.fields.size(); ++i) {
    const FieldKind kind = profile.fields[i];
    const auto lines = item_lines(kind, seen_iso_field);
    seen_iso_field = seen_iso_field || format_of(kind) == FieldFormat::iso3;
    out += "    " + std::to_string(i + 1) + ". ";
    for (std::size_t l = 0; l < lines.size(); ++l) {
      if (l > 0) out += "    ";
      out += lines[l];
      out += '\n';
    }
  }
  out +=
      "    \n"
      "Please return the information in the exact\n"
      "format below:\n"
      "    \n";
  for (FieldKind kind : profile.fields) {
    out += "    ";
    out += label_of(kind);
    out += ": ";
    out += format_placeholder(kind);
    out += '\n';
  }
  out +=
      "    \n"
      "Provide only the information requested, \n"
      "with no additional text or explanations.";
  return out;
}

std::string validity_template() {
  return "Given the following entry: \n"
         "{fullname}\n"
         "\n"
         "Is this entry the legal birth name of a real human person? \n"
         "Answer INVALID for animals, places, events, organizations, \n"
         "stage names or pseudonyms.\n"
         "\n"
         "Reply with exactly one word: VALID or INVALID.";
}

std::string render_template(std::string_view tmpl, std::string_view full_name) {
  const auto pos = tmpl.find(kNamePlaceholder);
  if (pos == std::string_view::npos) {
    throw InvalidProfile("template has no {fullname} placeholder");
  }
  std::string out;
  out.reserve(tmpl.size() + full_name.size());
  out.append(tmpl.substr(0, pos));
  out.append(full_name);
  out.append(tmpl.substr(pos + kNamePlaceholder.size()));
  return out;
}

PromptText build_prompt(const FieldProfile& profile, std::string_view full_name,
                        std::string record_id) {
  if (is_blank(full_name)) throw EmptyName("cannot build a prompt for an empty name");
  return {render_template(prompt_template(profile), full_name), profile.name,
          std::move(record_id)};
}

PromptText build_validity_prompt(std::string_view full_name, std::string record_id) {
  if (is_blank(full_name)) throw EmptyName("cannot build a prompt for an empty name");
  return {render_template(validity_template(), full_name), "validity", std::move(record_id)};
}

}  // namespace nameprobe
