/* Copyright 2026 The todsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef TODSIM_ERROR_H_
#define TODSIM_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace todsim {

// Base class for every error raised by the library. Each module derives a
// type carrying its own kind enum; `what()` is "<Kind>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, std::string detail)
      : std::runtime_error(std::string(kind) + ": " + detail),
        kind_name_(kind),
        detail_(std::move(detail)) {}

  const std::string& kind_name() const { return kind_name_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string kind_name_;
  std::string detail_;
};

template <typename Kind, const char* (*NameOf)(Kind)>
class KindError : public Error {
 public:
  KindError(Kind kind, std::string detail)
      : Error(NameOf(kind), std::move(detail)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace todsim

#endif  // TODSIM_ERROR_H_
