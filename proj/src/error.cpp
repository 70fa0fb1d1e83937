// Copyright 2026 The sdmbox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sdm/error.hpp"

namespace sdm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnmarkedRegion: return "UnmarkedRegion";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InsufficientHeadroom: return "InsufficientHeadroom";
    case ErrorCode::InsufficientTailroom: return "InsufficientTailroom";
    case ErrorCode::Underflow: return "Underflow";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::PropertyWriteForbidden: return "PropertyWriteForbidden";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::DefaultRouteMissing: return "DefaultRouteMissing";
    case ErrorCode::AttributeUnset: return "AttributeUnset";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::NotRuntimeSettable: return "NotRuntimeSettable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::DuplicateInstance: return "DuplicateInstance";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::IllegalPacketObjectUse: return "IllegalPacketObjectUse";
    case ErrorCode::UndeclaredName: return "UndeclaredName";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::LoopBudgetExceeded: return "LoopBudgetExceeded";
    case ErrorCode::CategoryUnsupported: return "CategoryUnsupported";
    case ErrorCode::RuntimeFault: return "RuntimeFault";
    case ErrorCode::CapacityInvalid: return "CapacityInvalid";
    case ErrorCode::UnknownDp: return "UnknownDp";
    case ErrorCode::RingFull: return "RingFull";
    case ErrorCode::StillReferenced: return "StillReferenced";
    case ErrorCode::InvalidProblem: return "InvalidProblem";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InfeasibleFlow: return "InfeasibleFlow";
    case ErrorCode::BoxFailed: return "BoxFailed";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace sdm
