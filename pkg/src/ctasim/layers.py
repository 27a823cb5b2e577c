"""Contact layer codes shared by the kernels and the public API.

The compiled kernel mirrors these as C constants; the backend parity tests
pin the two sets together.
"""

(HOUSEHOLD, RELATIVES, WORKPLACE_CLOSE, WORKPLACE_SITE,
 SCHOOL, FRIENDSHIP, RANDOM, CUSTOMER) = range(8)

N_LAYERS = 8

LAYER_LABELS = ("household", "relatives", "workplace_close", "workplace_site",
                "school", "friendship", "random", "customer")

# layers whose encounters a contact-tracing app logs (both parties using it);
# household, school, and relatives encounters are never logged — those groups
# are reached through their own notification cascades
CTA_RECORDED = (WORKPLACE_CLOSE, WORKPLACE_SITE, FRIENDSHIP, RANDOM, CUSTOMER)
