#include "twsim/model.hpp"

#include <stdexcept>
#include <string>

namespace twsim
{
    EntityMap::EntityMap(std::uint32_t num_entities, std::uint32_t num_lps)
        : num_entities_(num_entities), num_lps_(num_lps)
    {
        if (num_entities == 0 || num_lps == 0)
        {
            throw std::invalid_argument("entity map needs at least one entity and one LP");
        }
    }

    EntityMap::EntityMap(std::uint32_t num_entities, std::uint32_t num_lps, Mapping mapping)
        : EntityMap(num_entities, num_lps)
    {
        mapping_ = std::move(mapping);
    }

    LpId EntityMap::route(EntityId entity) const
    {
        if (entity >= num_entities_)
        {
            throw std::out_of_range("entity " + std::to_string(entity) + " out of range (E=" + std::to_string(num_entities_) + ")");
        }
        if (mapping_)
        {
            const LpId lp = mapping_(entity);
            if (lp >= num_lps_)
            {
                throw std::out_of_range("mapping placed entity " + std::to_string(entity) + " on unknown LP " + std::to_string(lp));
            }
            return lp;
        }
        return static_cast<LpId>(std::uint64_t{entity} * num_lps_ / num_entities_);
    }

    std::vector<EntityId> EntityMap::entities_of(LpId lp) const
    {
        std::vector<EntityId> out;
        for (EntityId e = 0; e < num_entities_; ++e)
        {
            if (route(e) == lp)
            {
                out.push_back(e);
            }
        }
        return out;
    }
}
