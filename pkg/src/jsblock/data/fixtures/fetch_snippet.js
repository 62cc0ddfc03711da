u = function(e) {
            ...
            return fetch(e).then(c.cg).then((function(e)
            {return e || {}}))
