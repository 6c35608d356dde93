"""A library's summaries do not depend on the program that links it.

Run: python demos/library_reuse.py
"""

from certflow.certify import analyze
from certflow.ir import parse_program

LIBRARY = """
class Codec {
  field key: int
  method init(this: Codec, k: int) -> void {
    this.key := k
    return
  }
  method encode(this: Codec, s: String) -> String {
    k := this.key
    t := s concat k
    return t
  }
}
"""

CHAT = LIBRARY + """
class Chat {
  entry method send(this: Chat, c: Codec) -> void {
    var tm: Phone
    var net: Net
    tm := call Alloc.phone/0()
    k := call Phone.imei/1(tm)
    call Codec.init/2(c, k)
    m := const "hi"
    out := call Codec.encode/2(c, m)
    net := call Alloc.net/0()
    call Net.post/2(net, out)
    return
  }
}
extern class Phone {
  method imei/1(this) -> int
}
extern class Net {
  method post/2(this, v) -> void
}
extern class Alloc {
  method phone/0() -> Phone
  method net/0() -> Net
}
"""

NOTES = LIBRARY + """
class Notes {
  entry method save(this: Notes, c: Codec, s: String) -> String {
    k := const 9
    call Codec.init/2(c, k)
    t := call Codec.encode/2(c, s)
    return t
  }
}
"""


def main():
    chat = analyze(parse_program(CHAT, "source Phone.imei/1 imei\nsink Net.post/2 net\n"))
    notes = analyze(parse_program(NOTES))
    for m in ("Codec.init/2", "Codec.encode/2"):
        same = "same" if chat[m] == notes[m] else "DIFFERENT"
        print(f"{m}: {sorted(chat[m])} ({same} in both hosts)")
    print("Chat.send/2:", sorted(chat["Chat.send/2"]))
    print("Notes.save/3:", sorted(notes["Notes.save/3"]))


if __name__ == "__main__":
    main()
