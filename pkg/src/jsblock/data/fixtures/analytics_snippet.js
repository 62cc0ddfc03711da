wd = function(a, b, c, d) {
    var e = O.XMLHttpRequest;
    if (!e) return !1;
    var g = new e;
    if (!("withCredentials" in g)) return !1;
    a = a.replace(/^http:/, "https:");
    g.open("POST", a, !0);
    g.withCredentials = !0;
    g.setRequestHeader("Content-Type", "text/plain");
    g.onreadystatechange = function() {
      if (4 == g.readyState) {
        if (d && "text/plain" === g.getResponseHeader("Content-Type")) try {
          Ea(d, g.responseText, c)
        }
        catch (ca) {
          ge("xhr",
            "rsp"), c()
        } else c();
        g = null}};
    g.send(b);
    return 0}
  ...
ta = function(a) {
    var b = M.createElement("img");
    b.width = 1;
    b.height = 1;
    b.src = a;
    return b}
